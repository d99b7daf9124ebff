// Command-line front end: synthetic scene generation, grouping, refinement,
// evaluation, threshold sweeps, and a per-stage timing report.

#include <charconv>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "instseg/evaluation.hpp"
#include "instseg/grouping.hpp"
#include "instseg/refinement.hpp"
#include "instseg/scene_io.hpp"
#include "instseg/synthesis.hpp"

namespace {

using instseg::GroupingConfig;
using instseg::Scene;

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

std::string fmt_double(double v) {
  char buf[40];
  const auto result = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, result.ptr);
}

int run_synth(const std::string& config_path, std::uint64_t seed,
              bool seed_given, const std::string& out_path) {
  instseg::SynthConfig config = instseg::read_synth_config(config_path);
  if (seed_given) config.seed = seed;
  Scene scene = instseg::synth_scene(config);
  if (config.corruption_fraction > 0.0)
    scene = instseg::corrupt_semantics(scene, config);
  instseg::write_scene(scene, out_path);
  std::cout << "wrote scene: " << out_path << " (" << scene.n_points()
            << " points, " << scene.n_classes() << " classes, "
            << scene.gt.n_instances() << " instances)\n";
  return 0;
}

int run_group(const std::string& scene_path, const std::string& mode,
              const GroupingConfig& config, const std::string& out_path) {
  const Scene scene = instseg::read_scene(scene_path);
  const std::vector<instseg::Proposal> proposals =
      mode == "hard" ? hard_group(scene, config) : soft_group(scene, config);
  instseg::write_proposals(proposals, out_path);
  std::cout << "wrote " << proposals.size() << " proposals: " << out_path
            << "\n";
  return 0;
}

int run_refine(const std::string& scene_path, const std::string& proposals_path,
               const std::string& external_path, double mask_threshold,
               const std::string& out_path) {
  const Scene scene = instseg::read_scene(scene_path);
  const std::vector<instseg::Proposal> proposals =
      instseg::read_proposals(proposals_path);
  const std::vector<instseg::RefinedInstance> instances =
      external_path.empty()
          ? instseg::heuristic_refine_all(scene, proposals, mask_threshold)
          : instseg::load_external_refinement(scene, proposals, external_path);
  instseg::write_instances(instances, out_path);
  std::cout << "wrote " << instances.size() << " instances: " << out_path
            << "\n";
  return 0;
}

int run_eval(const std::string& scene_path, const std::string& instances_path,
             const std::string& out_path) {
  const Scene scene = instseg::read_scene(scene_path);
  const std::vector<instseg::RefinedInstance> instances =
      instseg::read_instances(instances_path);
  const instseg::EvalReport report =
      instseg::evaluate_instances(instances, scene);
  std::cout << instseg::format_report_human(report);
  if (!out_path.empty()) {
    instseg::write_text_atomic(instseg::format_report_machine(report),
                               out_path);
    std::cout << "wrote report: " << out_path << "\n";
  }
  return 0;
}

int run_sweep(const std::string& scene_path, std::vector<double> taus,
              const std::string& out_path) {
  const Scene scene = instseg::read_scene(scene_path);
  const instseg::SemanticPrReport report = instseg::semantic_pr_sweep(
      scene.semantic, scene.gt.semantic_labels, taus);

  std::ostringstream csv;
  csv << "class,mode,tau,recall,precision\n";
  for (const auto& row : report.sweep)
    csv << row.class_id << ",sweep," << fmt_double(row.tau) << ","
        << fmt_double(row.recall) << "," << fmt_double(row.precision) << "\n";
  for (const auto& row : report.hard_baseline)
    csv << row.class_id << ",hard,," << fmt_double(row.recall) << ","
        << fmt_double(row.precision) << "\n";

  if (out_path.empty()) {
    std::cout << csv.str();
  } else {
    instseg::write_text_atomic(csv.str(), out_path);
    std::cout << "wrote sweep table: " << out_path << "\n";
  }
  return 0;
}

int run_bench(const std::string& scene_path, int repeat,
              const GroupingConfig& config) {
  double load_ms = 0.0, group_ms = 0.0, refine_ms = 0.0;
  std::size_t n_points = 0, n_proposals = 0;

  for (int r = 0; r < repeat; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    const Scene scene = instseg::read_scene(scene_path);
    load_ms += ms_since(t0);
    n_points = scene.n_points();

    t0 = std::chrono::steady_clock::now();
    const std::vector<instseg::Proposal> proposals = soft_group(scene, config);
    group_ms += ms_since(t0);
    n_proposals = proposals.size();

    t0 = std::chrono::steady_clock::now();
    const std::vector<instseg::RefinedInstance> instances =
        instseg::heuristic_refine_all(scene, proposals);
    refine_ms += ms_since(t0);
    (void)instances;
  }

  const double n = static_cast<double>(repeat);
  std::printf("scene: %zu points, %zu proposals, %d repeats\n", n_points,
              n_proposals, repeat);
  std::printf("%-22s %12s %12s\n", "stage", "mean_ms", "total_ms");
  std::printf("%-22s %12.3f %12.3f\n", "input_load", load_ms / n, load_ms);
  std::printf("%-22s %12.3f %12.3f\n", "soft_grouping", group_ms / n, group_ms);
  std::printf("%-22s %12.3f %12.3f\n", "top_down_refinement", refine_ms / n,
              refine_ms);
  const double total = load_ms + group_ms + refine_ms;
  std::printf("%-22s %12.3f %12.3f\n", "total", total / n, total);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bottom-up point-cloud instance grouping pipeline"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic scene");
  std::string synth_config, synth_out;
  std::uint64_t synth_seed = 0;
  synth->add_option("--config", synth_config, "JSON generator config")
      ->required()
      ->check(CLI::ExistingFile);
  auto* seed_opt = synth->add_option("--seed", synth_seed, "seed override");
  synth->add_option("--out", synth_out, "output scene file")->required();

  // group
  auto* group = app.add_subcommand("group", "run instance grouping");
  std::string group_scene, group_mode = "soft", group_out;
  GroupingConfig group_config;
  group->add_option("--scene", group_scene)->required()->check(CLI::ExistingFile);
  group->add_option("--mode", group_mode, "soft|hard")
      ->check(CLI::IsMember({"soft", "hard"}));
  group->add_option("--tau", group_config.tau, "score threshold");
  group->add_option("--bandwidth", group_config.bandwidth, "meters");
  group->add_option("--min-points", group_config.min_points);
  group->add_option("--out", group_out)->required();

  // refine
  auto* refine = app.add_subcommand("refine", "refine proposals");
  std::string refine_scene, refine_proposals, refine_external, refine_out;
  double refine_mask_threshold = 0.5;
  refine->add_option("--scene", refine_scene)->required()->check(CLI::ExistingFile);
  refine->add_option("--proposals", refine_proposals)
      ->required()
      ->check(CLI::ExistingFile);
  refine->add_option("--external", refine_external,
                     "externally produced refinement records")
      ->check(CLI::ExistingFile);
  refine->add_option("--mask-threshold", refine_mask_threshold);
  refine->add_option("--out", refine_out)->required();

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate instances");
  std::string eval_scene, eval_instances, eval_out;
  eval->add_option("--scene", eval_scene)->required()->check(CLI::ExistingFile);
  eval->add_option("--instances", eval_instances)
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--out", eval_out, "machine-readable report");

  // sweep-tau
  auto* sweep = app.add_subcommand("sweep-tau",
                                   "semantic recall/precision threshold sweep");
  std::string sweep_scene, sweep_out;
  std::vector<double> sweep_taus{0.01, 0.1, 0.2, 0.3, 0.4, 0.5};
  sweep->add_option("--scene", sweep_scene)->required()->check(CLI::ExistingFile);
  sweep->add_option("--taus", sweep_taus, "thresholds")->delimiter(',');
  sweep->add_option("--out", sweep_out, "CSV table");

  // bench
  auto* bench = app.add_subcommand("bench", "per-stage timing report");
  std::string bench_scene;
  int bench_repeat = 3;
  GroupingConfig bench_config;
  bench->add_option("--scene", bench_scene)->required()->check(CLI::ExistingFile);
  bench->add_option("--repeat", bench_repeat)->check(CLI::PositiveNumber);
  bench->add_option("--tau", bench_config.tau);
  bench->add_option("--bandwidth", bench_config.bandwidth);
  bench->add_option("--min-points", bench_config.min_points);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed())
      return run_synth(synth_config, synth_seed, seed_opt->count() > 0,
                       synth_out);
    if (group->parsed())
      return run_group(group_scene, group_mode, group_config, group_out);
    if (refine->parsed())
      return run_refine(refine_scene, refine_proposals, refine_external,
                        refine_mask_threshold, refine_out);
    if (eval->parsed()) return run_eval(eval_scene, eval_instances, eval_out);
    if (sweep->parsed()) return run_sweep(sweep_scene, sweep_taus, sweep_out);
    if (bench->parsed())
      return run_bench(bench_scene, bench_repeat, bench_config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
