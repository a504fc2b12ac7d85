// Command-line front end for the selection/packing pipeline.
//
// Exit codes: 0 ok, 2 bad input (files, flags, config), 3 internal invariant
// violation.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "selpack/pipeline.hpp"

namespace {

struct GlobalFlags {
  std::string config_path;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  bool quiet = false;
};

selpack::PipelineConfig resolve_config(const GlobalFlags& g) {
  selpack::PipelineConfig cfg;
  if (!g.config_path.empty()) cfg = selpack::load_config(g.config_path);
  if (!g.output_dir.empty()) cfg.output_dir = g.output_dir;
  if (g.seed) {
    cfg.embedding.seed = *g.seed;
    cfg.clustering.seed = *g.seed;
    cfg.selection.seed = *g.seed;
  }
  if (g.threads) cfg.threads = *g.threads;
  return cfg;
}

void note(const GlobalFlags& g, const std::string& msg) {
  if (!g.quiet) std::cout << msg << "\n";
}

selpack::ArtifactPaths prepare_output(const selpack::PipelineConfig& cfg) {
  selpack::ArtifactPaths paths{cfg.output_dir};
  std::filesystem::create_directories(paths.dir);
  return paths;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"instruction-data selection and batch-packing toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--config", g.config_path, "config file (sectioned key=value)");
  app.add_option("--output", g.output_dir, "output directory (overrides config)");
  app.add_option("--seed", g.seed, "seed applied to embedding, clustering and selection");
  app.add_option("--threads", g.threads, "worker thread count (overrides config)");
  app.add_flag("--quiet", g.quiet, "suppress progress notes");

  auto* cmd_ingest = app.add_subcommand("ingest", "load the dataset, write corpus + length stats");
  std::string opt_dataset;
  std::string opt_schema;
  cmd_ingest->add_option("--dataset", opt_dataset, "dataset path (overrides config)");
  cmd_ingest->add_option("--schema", opt_schema, "alpaca or prompt-response (overrides config)");

  auto* cmd_embed = app.add_subcommand("embed", "compute or import per-sample embeddings");
  auto* cmd_cluster = app.add_subcommand("cluster", "k-means over the embeddings");
  std::optional<std::size_t> opt_k;
  cmd_cluster->add_option("--k", opt_k, "cluster count (default: sqrt(n/2) heuristic)");

  auto* cmd_score = app.add_subcommand("score", "conditional/unconditional perplexities and IFD");

  auto* cmd_select = app.add_subcommand("select", "pick the training subset");
  std::string opt_sel_strategy;
  std::optional<double> opt_m;
  std::optional<double> opt_drop;
  cmd_select->add_option("--strategy", opt_sel_strategy,
                         "cdas | random | complexity | diversity | kcenter | graph-density");
  cmd_select->add_option("--m-percent", opt_m, "subset size as percent of corpus");
  cmd_select->add_option("--drop-ifd-above", opt_drop,
                         "drop samples whose IFD exceeds this before selecting");

  auto* cmd_pack = app.add_subcommand("pack", "plan training batches for the selection");
  std::string opt_pack_strategy;
  std::optional<std::int64_t> opt_max_len;
  std::optional<std::size_t> opt_batch;
  std::optional<std::int64_t> opt_sep;
  bool opt_global = false;
  cmd_pack->add_option("--strategy", opt_pack_strategy, "traditional | dynamic | dynamic-pack");
  cmd_pack->add_option("--max-len", opt_max_len, "model maximum input length");
  cmd_pack->add_option("--batch-size", opt_batch, "samples per batch");
  cmd_pack->add_option("--separator-cost", opt_sep, "tokens charged between packed samples");
  cmd_pack->add_flag("--global", opt_global, "pack across the whole dataset, then re-batch");

  auto* cmd_report = app.add_subcommand("report", "padding comparison of all three strategies");

  auto* cmd_pipeline = app.add_subcommand("pipeline", "run every stage in order");

  auto* cmd_bench = app.add_subcommand("bench-selectors", "time the sampling strategies");
  std::vector<std::string> opt_strategies = {"kmeans-cdas", "kcenter", "graph-density"};
  std::size_t opt_repeats = 5;
  cmd_bench->add_option("--strategies", opt_strategies, "strategies to time")
      ->delimiter(',');
  cmd_bench->add_option("--repeats", opt_repeats, "timing repeats per strategy");

  auto* cmd_sweep = app.add_subcommand("sweep-m", "one selection + report per sampling rate");
  std::vector<double> opt_m_values = {10, 20, 30, 40, 50, 60};
  cmd_sweep->add_option("--m", opt_m_values, "m values in (0,100]")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    selpack::PipelineConfig cfg = resolve_config(g);
    if (!opt_dataset.empty()) cfg.dataset.path = opt_dataset;
    if (!opt_schema.empty()) cfg.dataset.schema = selpack::schema_from_string(opt_schema);
    if (opt_k) cfg.clustering.k = *opt_k;
    if (!opt_sel_strategy.empty()) {
      cfg.selection.strategy = selpack::strategy_from_string(opt_sel_strategy);
    }
    if (opt_m) cfg.selection.m_percent = *opt_m;
    if (opt_drop) cfg.scoring.drop_ifd_above = *opt_drop;
    if (!opt_pack_strategy.empty()) {
      cfg.packing.strategy = selpack::pack_strategy_from_string(opt_pack_strategy);
    }
    if (opt_max_len) cfg.packing.max_len = *opt_max_len;
    if (opt_batch) cfg.packing.batch_size = *opt_batch;
    if (opt_sep) cfg.packing.separator_cost = *opt_sep;
    if (opt_global) cfg.packing.global_pack = true;

    if (app.got_subcommand(cmd_pipeline)) {
      selpack::run_pipeline(cfg);
      note(g, "pipeline ok: " + cfg.output_dir);
      return 0;
    }
    if (app.got_subcommand(cmd_bench)) {
      auto table = selpack::bench_selectors(cfg, opt_strategies, opt_repeats);
      std::cout << table.dump(2) << "\n";
      return 0;
    }
    if (app.got_subcommand(cmd_sweep)) {
      auto summary = selpack::sweep_m(cfg, opt_m_values);
      std::cout << summary.dump(2) << "\n";
      return 0;
    }

    selpack::validate_config(cfg);
    auto paths = prepare_output(cfg);
    if (app.got_subcommand(cmd_ingest)) {
      selpack::detail::run_stage("ingest", paths, [&] { selpack::stage_ingest(cfg, paths); });
      note(g, "wrote " + paths.corpus() + " and " + paths.stats());
    } else if (app.got_subcommand(cmd_embed)) {
      selpack::detail::run_stage("embed", paths, [&] { selpack::stage_embed(cfg, paths); });
      note(g, "wrote " + paths.embeddings());
    } else if (app.got_subcommand(cmd_cluster)) {
      selpack::detail::run_stage("cluster", paths, [&] { selpack::stage_cluster(cfg, paths); });
      note(g, "wrote " + paths.clusters() + " and " + paths.centroids());
    } else if (app.got_subcommand(cmd_score)) {
      selpack::detail::run_stage("score", paths, [&] { selpack::stage_score(cfg, paths); });
      note(g, "wrote " + paths.scores());
    } else if (app.got_subcommand(cmd_select)) {
      selpack::detail::run_stage("select", paths,
                                 [&] { selpack::stage_select(cfg, paths, paths); });
      note(g, "wrote " + paths.selection());
    } else if (app.got_subcommand(cmd_pack)) {
      selpack::detail::run_stage("pack", paths, [&] { selpack::stage_pack(cfg, paths, paths); });
      note(g, "wrote " + paths.manifest());
    } else if (app.got_subcommand(cmd_report)) {
      selpack::detail::run_stage("report", paths,
                                 [&] { selpack::stage_report(cfg, paths, paths); });
      note(g, "wrote " + paths.report());
    }
    return 0;
  } catch (const selpack::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const selpack::InvariantError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
