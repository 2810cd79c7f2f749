#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cohent/commands.hpp"

namespace {

int finish(const cohent::CommandResult& r) {
  std::cout << r.output;
  if (!r.error.empty()) std::cerr << "error: " << r.error << "\n";
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cohent: coherence to multipartite entanglement conversion toolkit"};
  app.require_subcommand(1);

  std::string input, output, mode = "activate", variant = "W";
  auto* convert = app.add_subcommand("convert", "Run the conversion protocol on a qudit state");
  convert->add_option("--input", input, "State JSON file")->required();
  convert->add_option("--output", output, "Write the converted state here (default: embed in report)");
  convert->add_option("--mode", mode, "activate | full_unitary | locc")
      ->check(CLI::IsMember({"activate", "full_unitary", "locc"}));
  convert->add_option("--variant", variant, "Ancilla encoding: W | GHZ")->check(CLI::IsMember({"W", "GHZ"}));

  cohent::MeasureRequest req;
  std::string measure_input, reference, dump_sdp;
  int measure_k = 0;
  auto* measure = app.add_subcommand("measure", "Evaluate a resource measure");
  measure->add_option("--input", measure_input, "State JSON file")->required();
  measure->add_option("--measure", req.measure,
                      "coherence_rank | coherence_number_bound | depth | geometric_coherence | "
                      "geometric_entanglement | fidelity_to")
      ->required();
  auto* k_opt = measure->add_option("--k", measure_k, "Level k");
  measure->add_option("--reference", reference, "Reference state for fidelity_to");
  measure->add_option("--tol", req.tol, "Detection threshold for coherence_number_bound");
  measure->add_option("--dump-sdp", dump_sdp, "Write the k-coherent SDP in SDPA sparse format");

  std::string theorem;
  cohent::RunConfig cfg;
  int verify_k = 0;
  double verify_tol = 0.0;
  auto* verify = app.add_subcommand("verify", "Seeded randomized verification of a conversion theorem");
  verify->add_option("theorem", theorem, "t3 | t4 | t8")->required()->check(CLI::IsMember({"t3", "t4", "t8"}));
  verify->add_option("--d", cfg.d, "Qudit dimension (2..6)");
  auto* vk_opt = verify->add_option("--k", verify_k, "Only this level (default: all valid k)");
  verify->add_option("--trials", cfg.trials, "Number of random trials");
  verify->add_option("--seed", cfg.seed, "64-bit seed");
  auto* vtol_opt = verify->add_option("--tol", verify_tol, "Assertion tolerance");
  verify->add_option("--format", cfg.output_format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  verify->add_option("--family", cfg.family, "t4 input family: default | incoherent")
      ->check(CLI::IsMember({"default", "incoherent"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cohent::kExitPass : cohent::kExitInput;
  }

  if (convert->parsed()) return finish(cohent::cmd_convert(input, output, mode, variant));
  if (measure->parsed()) {
    if (*k_opt) req.k = measure_k;
    if (!reference.empty()) req.reference_path = reference;
    if (!dump_sdp.empty()) req.dump_sdp_path = dump_sdp;
    return finish(cohent::cmd_measure(measure_input, req));
  }
  if (*vk_opt) cfg.k = verify_k;
  if (*vtol_opt) cfg.tolerance = verify_tol;
  return finish(cohent::cmd_verify(theorem, cfg));
}
