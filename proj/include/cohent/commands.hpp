#pragma once

// Command implementations behind the `cohent` executable. Each command takes
// parsed arguments and returns its exit code plus the text it would print,
// so it can be driven in-process.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cohent/errors.hpp"
#include "cohent/hilbert.hpp"
#include "cohent/measures.hpp"
#include "cohent/protocol.hpp"
#include "cohent/random.hpp"
#include "cohent/sdp.hpp"

namespace cohent {

enum ExitCode : int { kExitPass = 0, kExitAssertion = 1, kExitInput = 2, kExitSolver = 3 };

struct CommandResult {
  int exit_code = kExitPass;
  std::string output;
  std::string error;
};

inline constexpr double kDefaultT3Tol = 1e-9;
inline constexpr double kDefaultT4Tol = kConversionSlack;
inline constexpr double kDefaultT8Tol = 1e-10;
inline constexpr int kMaxMixedRank = 3;

struct RunConfig {
  std::uint64_t seed = 1;
  int trials = 10;
  int d = 3;
  std::optional<int> k;
  std::optional<double> tolerance;
  std::string output_format = "json";
  std::string family = "default";

  void validate() const {
    if (trials < 1) throw InputError("trials must be >= 1");
    if (d < kMinProtocolDim || d > kMaxProtocolDim) throw InputError("d must satisfy 2 <= d <= 6");
    if (k && (*k < 2 || *k > d)) throw InputError("k must satisfy 2 <= k <= d");
    if (tolerance && !(*tolerance > 0)) throw InputError("tolerance must be positive");
    if (output_format != "json" && output_format != "csv") throw InputError("format must be json or csv");
    if (family != "default" && family != "incoherent") throw InputError("family must be default or incoherent");
  }
};

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

inline nlohmann::json dims_json(const SpaceShape& s) { return s.dims(); }

template <class F>
CommandResult guarded(F&& body) {
  try {
    return body();
  } catch (const SolverError& e) {
    return {kExitSolver, "", e.what()};
  } catch (const nlohmann::json::exception& e) {
    return {kExitInput, "", e.what()};
  } catch (const Error& e) {
    return {kExitInput, "", e.what()};
  }
}

inline IsometryVariant parse_variant(const std::string& v) {
  if (v == "W") return IsometryVariant::W;
  if (v == "GHZ") return IsometryVariant::GHZ;
  throw InputError("variant must be W or GHZ");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// convert

struct ConvertOutput {
  State state;
  nlohmann::json report;
};

inline ConvertOutput convert_state(const State& input, const std::string& mode, const std::string& variant_name) {
  const IsometryVariant variant = detail::parse_variant(variant_name);
  const SpaceShape& in_shape = shape_of(input);
  require_single_qudit(in_shape, "convert");
  const int d = in_shape.dim(0);
  if (d < kMinProtocolDim || d > kMaxProtocolDim) throw InputError("convert: qudit dimension must be 2..6");
  if (variant == IsometryVariant::GHZ && mode != "activate") {
    throw InputError("convert: the GHZ variant is only available with mode=activate");
  }
  const auto* pure = std::get_if<PureState>(&input);

  nlohmann::json report;
  report["mode"] = mode;
  report["variant"] = variant_name;
  report["input_dims"] = detail::dims_json(in_shape);
  report["input_coherence_rank"] = pure ? nlohmann::json(coherence_rank(*pure)) : nlohmann::json(nullptr);

  std::optional<State> out;
  if (mode == "activate") {
    if (variant == IsometryVariant::W) {
      out = pure ? State(activate(*pure)) : State(activate(std::get<DensityMatrix>(input)));
    } else {
      const IsometryBundle iso = killoran_isometry(ClassicalFrame::orthonormal(d), IsometryVariant::GHZ);
      if (pure) {
        out = iso.apply(*pure);
      } else {
        const ComplexMatrix& rho = std::get<DensityMatrix>(input).matrix();
        out = DensityMatrix::normalized(iso.output_shape(), iso.v * rho * iso.v.adjoint());
      }
    }
  } else if (mode == "full_unitary") {
    const DensityMatrix rho_prime = activate(to_density(input));
    const ComplexMatrix ub = decoupling_full_unitary(d);
    const ComplexMatrix rotated = ub * rho_prime.matrix() * ub.adjoint();
    const std::vector<int> dims = protocol_shape(d).dims();
    const std::vector<int> qudit{0};
    std::vector<int> anc(d);
    for (int q = 0; q < d; ++q) anc[q] = q + 1;
    const ComplexMatrix qudit_marginal = partial_trace(rotated, dims, qudit);
    const DensityMatrix phi = DensityMatrix::from_pure(maximally_coherent(d));
    report["qudit_marginal_fidelity_to_phi_plus"] =
        fidelity(DensityMatrix::normalized(SpaceShape({d}), qudit_marginal), phi);
    if (pure) {
      out = decouple_pure(activate(*pure));
    } else {
      out = DensityMatrix::normalized(register_shape(d), partial_trace(rotated, dims, anc));
    }
  } else if (mode == "locc") {
    out = locc_decouple(activate(to_density(input)));
  } else {
    throw InputError("mode must be activate, full_unitary or locc");
  }

  const SpaceShape& out_shape = shape_of(*out);
  report["output_dims"] = detail::dims_json(out_shape);
  const DensityMatrix out_rho = to_density(*out);
  report["output_purity"] = out_rho.purity();
  if (const auto* p = std::get_if<PureState>(&*out)) {
    const DepthReport depth = entanglement_depth_pure(*p);
    report["depth"] = depth.depth;
    report["witness_partition"] = partition_json(depth.witness_partition);
  } else {
    report["depth"] = nullptr;
    report["witness_partition"] = nullptr;
  }
  return {*out, report};
}

inline CommandResult cmd_convert(const std::string& input_path, const std::string& output_path,
                                 const std::string& mode, const std::string& variant) {
  return detail::guarded([&]() -> CommandResult {
    const State in = parse_state(detail::read_file(input_path));
    ConvertOutput res = convert_state(in, mode, variant);
    if (output_path.empty()) {
      res.report["state"] = state_json(res.state);
    } else {
      std::ofstream os(output_path, std::ios::binary);
      if (!os) throw InputError("cannot write " + output_path);
      os << serialize_state(res.state) << "\n";
      res.report["state_file"] = output_path;
    }
    return {kExitPass, res.report.dump(2) + "\n", ""};
  });
}

// ---------------------------------------------------------------------------
// measure

struct MeasureRequest {
  std::string measure;
  std::optional<int> k;
  std::optional<std::string> reference_path;
  std::optional<std::string> dump_sdp_path;
  double tol = 1e-7;
};

inline nlohmann::json measure_state(const State& s, const MeasureRequest& req,
                                    const std::optional<State>& reference = std::nullopt) {
  const SdpSolver solver;
  const auto* pure = std::get_if<PureState>(&s);
  auto need_k = [&]() {
    if (!req.k) throw InputError("measure " + req.measure + " requires --k");
    return *req.k;
  };
  auto integer_report = [&](long value, MeasureMethod method) {
    nlohmann::json j;
    j["measure"] = req.measure;
    j["k"] = nullptr;
    j["value"] = value;
    j["method"] = to_string(method);
    j["closest_state"] = nullptr;
    j["solver_gap"] = nullptr;
    return j;
  };

  if (req.measure == "coherence_rank") {
    if (!pure) throw InputError("coherence_rank needs a pure state");
    return integer_report(coherence_rank(*pure), MeasureMethod::ClosedForm);
  }
  if (req.measure == "coherence_number_bound") {
    require_single_qudit(shape_of(s), "coherence_number_bound");
    const int d = shape_of(s).dim(0);
    int bound = 1;
    MeasureMethod method = pure ? MeasureMethod::ClosedForm : MeasureMethod::Sdp;
    for (int k = d; k >= 2; --k) {
      if (geometric_coherence(s, k, solver).value > req.tol) {
        bound = k;
        break;
      }
    }
    return integer_report(bound, method);
  }
  if (req.measure == "depth") {
    if (!pure) throw InputError("depth needs a pure state");
    const DepthReport r = entanglement_depth_pure(*pure);
    nlohmann::json j = integer_report(r.depth, MeasureMethod::BruteForce);
    j["witness_partition"] = partition_json(r.witness_partition);
    j["tolerance"] = r.tolerance;
    return j;
  }
  if (req.measure == "geometric_coherence") {
    const int k = need_k();
    if (req.dump_sdp_path) {
      std::ofstream os(*req.dump_sdp_path);
      if (!os) throw InputError("cannot write " + *req.dump_sdp_path);
      write_sdpa(build_kcoherent_fidelity_sdp(to_density(s), k), os);
    }
    return measure_json(req.measure, k, geometric_coherence(s, k, solver));
  }
  if (req.measure == "geometric_entanglement") {
    // --k k reports E_G^(k+1) of a protocol-form state
    const int k = need_k();
    const MeasureResult r = pure ? geometric_entanglement_protocol_pure(*pure, k)
                                 : geometric_entanglement_protocol_mixed(std::get<DensityMatrix>(s), k, solver);
    return measure_json(req.measure, k + 1, r);
  }
  if (req.measure == "fidelity_to") {
    if (!reference) throw InputError("fidelity_to requires --reference");
    MeasureResult r;
    r.value = fidelity(to_density(s), to_density(*reference));
    return measure_json(req.measure, std::nullopt, r);
  }
  throw InputError("unknown measure " + req.measure);
}

inline CommandResult cmd_measure(const std::string& input_path, const MeasureRequest& req) {
  return detail::guarded([&]() -> CommandResult {
    const State s = parse_state(detail::read_file(input_path));
    std::optional<State> ref;
    if (req.reference_path) ref = parse_state(detail::read_file(*req.reference_path));
    return {kExitPass, measure_state(s, req, ref).dump(2) + "\n", ""};
  });
}

// ---------------------------------------------------------------------------
// verify

struct VerifyTable {
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;
  int failures = 0;
  int solver_failures = 0;
  nlohmann::json summary = nlohmann::json::object();
};

namespace detail {

inline VerifyTable verify_t3(const RunConfig& cfg, double tol) {
  VerifyTable t;
  t.columns = {"trial", "d", "coherence_rank", "depth_activated", "depth_decoupled", "pass"};
  for (int trial = 0; trial < cfg.trials; ++trial) {
    Rng rng = trial_rng(cfg.seed, static_cast<std::uint64_t>(trial));
    const PureState psi = random_sparse_pure(cfg.d, rng);
    const int k = coherence_rank(psi);
    const PureState psi_prime = activate(psi);
    const int depth1 = entanglement_depth_pure(psi_prime, tol).depth;
    const int depth2 = entanglement_depth_pure(decouple_pure(psi_prime), tol).depth;
    const bool pass = k >= 2 ? (depth1 == k + 1 && depth2 == k) : (depth1 == 1 && depth2 == 1);
    if (!pass) ++t.failures;
    t.rows.push_back({trial, cfg.d, k, depth1, depth2, pass});
  }
  return t;
}

inline VerifyTable verify_t8(const RunConfig& cfg, double tol) {
  VerifyTable t;
  t.columns = {"trial", "d", "k", "coherence", "entanglement", "abs_diff", "pass"};
  double worst = 0.0;
  for (int trial = 0; trial < cfg.trials; ++trial) {
    Rng rng = trial_rng(cfg.seed, static_cast<std::uint64_t>(trial));
    const PureState psi = random_pure(cfg.d, rng);
    const PureState psi_prime = activate(psi);
    const int k_lo = cfg.k.value_or(2);
    const int k_hi = cfg.k.value_or(cfg.d);
    for (int k = k_lo; k <= k_hi; ++k) {
      const double c = geometric_coherence_pure(psi, k).value;
      const double e = geometric_entanglement_protocol_pure(psi_prime, k).value;
      const double diff = std::abs(c - e);
      worst = std::max(worst, diff);
      const bool pass = diff <= tol;
      if (!pass) ++t.failures;
      t.rows.push_back({trial, cfg.d, k, c, e, diff, pass});
    }
  }
  t.summary["max_abs_diff"] = worst;
  return t;
}

inline DensityMatrix random_incoherent(int d, Rng& rng) {
  ComplexMatrix m = ComplexMatrix::Zero(d, d);
  for (int i = 0; i < d; ++i) m(i, i) = uniform01(rng) + 1e-3;
  return DensityMatrix::normalized(SpaceShape({d}), m);
}

inline VerifyTable verify_t4(const RunConfig& cfg, double tol) {
  VerifyTable t;
  t.columns = {"trial", "d", "k", "rank", "coherence", "entanglement_activated", "entanglement_decoupled",
               "gap_max", "pass"};
  const SdpSolver solver;
  double worst = -1.0;
  for (int trial = 0; trial < cfg.trials; ++trial) {
    Rng rng = trial_rng(cfg.seed, static_cast<std::uint64_t>(trial));
    const int max_rank = std::min(kMaxMixedRank, cfg.d);
    const int rank = uniform_int(rng, 1, max_rank);
    const DensityMatrix rho = cfg.family == "incoherent" ? random_incoherent(cfg.d, rng) : random_mixed(cfg.d, rank, rng);
    const int rho_rank = rank_with_tol(rho.matrix());
    const int k_lo = cfg.k.value_or(2);
    const int k_hi = cfg.k.value_or(cfg.d);
    for (int k = k_lo; k <= k_hi; ++k) {
      try {
        const ConversionReport r = verify_conversion_bounds(rho, k, solver, tol);
        const double gap = std::max(r.gap_activated, r.gap_decoupled);
        worst = std::max(worst, gap);
        const bool pass = r.holds();
        if (!pass) ++t.failures;
        t.rows.push_back({trial, cfg.d, k, rho_rank, r.coherence, r.entanglement_activated,
                          r.entanglement_decoupled, gap, pass});
      } catch (const SolverError&) {
        ++t.solver_failures;
        t.rows.push_back({trial, cfg.d, k, rho_rank, nullptr, nullptr, nullptr, nullptr, "solver_failure"});
      }
    }
  }
  t.summary["max_gap"] = worst;
  return t;
}

inline std::string csv_cell(const nlohmann::json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return fmt(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace detail

inline CommandResult cmd_verify(const std::string& theorem, const RunConfig& cfg) {
  return detail::guarded([&]() -> CommandResult {
    cfg.validate();
    VerifyTable t;
    double tol = 0.0;
    if (theorem == "t3") {
      tol = cfg.tolerance.value_or(kDefaultT3Tol);
      t = detail::verify_t3(cfg, tol);
    } else if (theorem == "t4") {
      tol = cfg.tolerance.value_or(kDefaultT4Tol);
      t = detail::verify_t4(cfg, tol);
    } else if (theorem == "t8") {
      tol = cfg.tolerance.value_or(kDefaultT8Tol);
      t = detail::verify_t8(cfg, tol);
    } else {
      throw InputError("theorem must be t3, t4 or t8");
    }
    const int code = t.failures > 0 ? kExitAssertion : (t.solver_failures > 0 ? kExitSolver : kExitPass);

    std::string out;
    if (cfg.output_format == "csv") {
      std::ostringstream os;
      for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
      os << "\n";
      for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << detail::csv_cell(row[c]);
        os << "\n";
      }
      out = os.str();
    } else {
      nlohmann::json j;
      j["theorem"] = theorem;
      j["config"] = {{"seed", cfg.seed}, {"trials", cfg.trials}, {"d", cfg.d},
                     {"k", cfg.k ? nlohmann::json(*cfg.k) : nlohmann::json(nullptr)},
                     {"tolerance", tol}, {"family", cfg.family}};
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& row : t.rows) {
        nlohmann::json r;
        for (std::size_t c = 0; c < row.size(); ++c) r[t.columns[c]] = row[c];
        rows.push_back(r);
      }
      j["trials"] = rows;
      nlohmann::json summary = t.summary;
      summary["rows"] = t.rows.size();
      summary["failures"] = t.failures;
      summary["solver_failures"] = t.solver_failures;
      summary["pass"] = code == kExitPass;
      j["summary"] = summary;
      out = j.dump(2) + "\n";
    }
    return {code, out, ""};
  });
}

}  // namespace cohent
