#include "cli.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "kgalign/error.hpp"
#include "kgalign/pipeline.hpp"
#include "kgalign/synth.hpp"

namespace kgalign {

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct AlignOptions {
  std::string kg1, kg2, features1, features2, gold, out, log, model, trace;
  std::string final_source = "se";
  std::string optimizer = "adam";
  bool no_csls = false;
};

struct EvalOptions {
  std::string mappings, gold;
};

KgPair load_pair(const AlignOptions& o, bool with_features) {
  KgPair pair;
  pair.kg1 = load_kg_dir(o.kg1);
  pair.kg2 = load_kg_dir(o.kg2);
  if (with_features) {
    pair.features1 = parse_features(o.features1, pair.kg1.entities);
    pair.features2 = parse_features(o.features2, pair.kg2.entities);
  } else {
    pair.features1 = FeatureStore::empty(1, pair.kg1.num_entities());
    pair.features2 = FeatureStore::empty(1, pair.kg2.num_entities());
  }
  if (!o.gold.empty()) pair.gold_links = parse_links(o.gold, pair.kg1, pair.kg2);
  return pair;
}

void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << '\n';
}

int run_align(const AlignOptions& o, PipelineConfig config, std::ostream& out) {
  config.inference.use_csls = !o.no_csls;
  config.final_source = o.final_source == "pr" ? FinalSource::Pr : FinalSource::Se;
  config.train.optimizer = o.optimizer == "sgd" ? Optimizer::Sgd : Optimizer::Adam;
  validate(config);

  const auto pair = load_pair(o, true);
  const auto result = run_pipeline(pair, config);
  write_scored_pairs(result.final_alignment(config.final_source), pair.kg1, pair.kg2,
                     std::filesystem::path(o.out));
  if (!o.log.empty()) write_json(result.log_json(), o.log);
  if (!o.model.empty()) save_model(result.model, o.model);
  if (!o.trace.empty()) write_loss_trace(result.loss_trace, o.trace);
  if (!result.rounds.empty() && result.rounds.back().se_report) {
    out << nlohmann::json{{"se", result.rounds.back().se_report->to_json()},
                          {"pr", result.rounds.back().pr_report->to_json()}}
               .dump()
        << '\n';
  }
  return 0;
}

int run_paris_cmd(const AlignOptions& o, const PipelineConfig& config, std::ostream& out) {
  validate(config);
  const auto pair = load_pair(o, false);
  const auto mappings = run_paris_only(pair, config);
  write_scored_pairs(mappings, pair.kg1, pair.kg2, std::filesystem::path(o.out));
  if (!pair.gold_links.empty()) {
    out << evaluate_mappings(mappings, pair.gold_links, config.eval_ks).to_json().dump() << '\n';
  }
  return 0;
}

int run_eval(const EvalOptions& o, std::ostream& out) {
  Vocabulary left, right;
  std::vector<ScoredPair> mappings;
  {
    std::ifstream in(o.mappings, std::ios::binary);
    if (!in) throw Error("cannot open " + o.mappings);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto f = split_tabs(line);
      if (f.size() != 3) throw ParseError(o.mappings, line_no, "expected uri1<TAB>uri2<TAB>score");
      double score = 0.0;
      try {
        score = std::stod(std::string(f[2]));
      } catch (const std::exception&) {
        throw ParseError(o.mappings, line_no, "invalid score");
      }
      mappings.push_back({left.intern(f[0]), right.intern(f[1]), score});
    }
  }
  std::vector<EntityLink> gold;
  {
    std::ifstream in(o.gold, std::ios::binary);
    if (!in) throw Error("cannot open " + o.gold);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto f = split_tabs(line);
      if (f.size() != 2) throw ParseError(o.gold, line_no, "expected uri1<TAB>uri2");
      gold.push_back({left.intern(f[0]), right.intern(f[1])});
    }
  }
  out << evaluate_mappings(mappings, gold, {1, 5}).to_json().dump() << '\n';
  return 0;
}

void add_kg_options(CLI::App* cmd, AlignOptions& o) {
  cmd->add_option("--kg1", o.kg1, "Directory with rel_triples and attr_triples of graph 1")
      ->required();
  cmd->add_option("--kg2", o.kg2, "Directory with rel_triples and attr_triples of graph 2")
      ->required();
  cmd->add_option("--gold", o.gold, "Reference links (uri1<TAB>uri2) for evaluation");
  cmd->add_option("--out", o.out, "Output alignment TSV")->required();
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Self-supervised entity alignment for knowledge-graph pairs", "kgalign"};
  app.require_subcommand(1);

  AlignOptions align_opts;
  PipelineConfig config;
  EvalOptions eval_opts;
  SynthSpec synth;
  std::string synth_out;

  auto* align_cmd = app.add_subcommand("align", "Run the full alternating pipeline");
  add_kg_options(align_cmd, align_opts);
  align_cmd->add_option("--features1", align_opts.features1, "Feature file of graph 1")->required();
  align_cmd->add_option("--features2", align_opts.features2, "Feature file of graph 2")->required();
  align_cmd->add_option("--alpha", config.fusion.alpha, "Weight of the PR probability in fusion");
  align_cmd->add_option("--gamma", config.train.gamma, "Margin of the ranking loss");
  align_cmd->add_option("--neg-k", config.train.neg_k, "Hard negatives per positive and side");
  align_cmd->add_option("--dim", config.dim, "Per-modality embedding dimension");
  align_cmd->add_option("--rounds", config.rounds, "Outer train/reason rounds");
  align_cmd->add_option("--epochs", config.train.epochs, "Training epochs per round");
  align_cmd->add_option("--lr", config.train.lr, "Learning rate");
  align_cmd->add_option("--optimizer", align_opts.optimizer, "adam or sgd")
      ->check(CLI::IsMember({"adam", "sgd"}));
  align_cmd->add_option("--theta", config.paris.threshold, "PR mapping threshold");
  align_cmd->add_option("--csls-k", config.inference.csls_k, "CSLS neighbourhood size");
  align_cmd->add_flag("--no-csls", align_opts.no_csls, "Rank by plain cosine");
  align_cmd->add_option("--seed", config.seed, "Random seed");
  align_cmd->add_option("--final", align_opts.final_source, "Final answer from pr or se")
      ->check(CLI::IsMember({"pr", "se"}));
  align_cmd->add_flag("--warm-start", config.warm_start, "Keep parameters across rounds");
  align_cmd->add_option("--log", align_opts.log, "Round log JSON path");
  align_cmd->add_option("--model", align_opts.model, "Write final model parameters here");
  align_cmd->add_option("--trace", align_opts.trace, "Loss trace CSV of the last round");

  auto* paris_cmd = app.add_subcommand("paris-only", "Run probabilistic reasoning alone");
  add_kg_options(paris_cmd, align_opts);
  paris_cmd->add_option("--theta", config.paris.threshold, "PR mapping threshold");

  auto* eval_cmd = app.add_subcommand("eval", "Score a mapping TSV against reference links");
  eval_cmd->add_option("--mappings", eval_opts.mappings, "uri1<TAB>uri2<TAB>score")->required();
  eval_cmd->add_option("--gold", eval_opts.gold, "uri1<TAB>uri2")->required();

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic aligned fixture");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--entities", synth.n_entities, "Entities per graph");
  synth_cmd->add_option("--relations", synth.n_relations, "Relation count");
  synth_cmd->add_option("--attributes", synth.n_attributes, "Attribute count");
  synth_cmd->add_option("--degree", synth.avg_degree, "Average relation degree");
  synth_cmd->add_option("--overlap", synth.name_overlap_ratio, "Fraction with matchable names");
  synth_cmd->add_option("--sigma", synth.feature_noise_sigma, "Feature noise");
  synth_cmd->add_option("--images", synth.images_per_entity, "Image vectors per entity");
  synth_cmd->add_option("--feature-dim", synth.feature_dim, "Feature vector dimension");
  synth_cmd->add_option("--seed", synth.seed, "Random seed");
  synth_cmd->add_flag("--powerlaw", synth.powerlaw, "Long-tailed degree distribution");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*align_cmd) return run_align(align_opts, config, out);
    if (*paris_cmd) return run_paris_cmd(align_opts, config, out);
    if (*eval_cmd) return run_eval(eval_opts, out);
    if (*synth_cmd) {
      const auto pair = generate(synth);
      write_fixture(pair, synth_out);
      return 0;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace kgalign
