// Copyright 2026 The draftsel Authors
// SPDX-License-Identifier: Apache-2.0

#include "draftsel/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "draftsel/error.hpp"
#include "draftsel/oracle.hpp"
#include "draftsel/parallel.hpp"
#include "draftsel/report.hpp"

namespace draftsel {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

ToolConfig load(const CommandContext& ctx) {
  ToolConfig c = load_config(ctx.config_path);
  if (ctx.overrides.seeds) c.seeds = *ctx.overrides.seeds;
  if (ctx.overrides.learners) c.learners = *ctx.overrides.learners;
  validate(c);
  return c;
}

EpisodeSetup build_setup(const ToolConfig& c) {
  if (c.study != Study::specialist) throw Error("config-invalid", "study: this verb needs \"specialist\"");
  EpisodeSetup setup = make_specialist_setup(c.run.scenario);
  if (c.include_target_drafter) {
    setup.pool.push_back(DrafterSpec{setup.pool.size(), *setup.target, "target"});
  }
  return setup;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

void write_manifest(const CommandContext& ctx, const ToolConfig& c) {
  ordered_json m;
  m["tool_version"] = kToolVersion;
  m["seeds"] = c.resolved_seeds();
  m["config"] = to_json(c);
  write_file_atomic(ctx.out_dir / "manifest.json", dump(m));
}

// At most `points` evenly spaced samples of a curve.
Series thin(std::string label, const std::vector<double>& y, std::size_t points = 400) {
  Series s{std::move(label), {}, {}};
  const std::size_t stride = std::max<std::size_t>(1, y.size() / points);
  for (std::size_t i = 0; i < y.size(); i += stride) {
    s.x.push_back(static_cast<double>(i + 1));
    s.y.push_back(y[i]);
  }
  if (!y.empty() && s.x.back() != static_cast<double>(y.size())) {
    s.x.push_back(static_cast<double>(y.size()));
    s.y.push_back(y.back());
  }
  return s;
}

struct SeedRuns {
  std::vector<MetricSummary> summaries;
  EpisodeLog first;
};

SeedRuns run_all_seeds(const RunConfig& config, const EpisodeSetup& setup,
                       const std::vector<std::uint64_t>& seeds) {
  SeedRuns r;
  r.summaries.resize(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) {
    EpisodeLog log = run_episode(config, setup, seeds[i]);
    r.summaries[i] = summarize(log);
    if (i == 0) r.first = std::move(log);
  });
  return r;
}

template <class Fn>
int guarded(const CommandContext& ctx, Fn&& body) {
  std::ostream& err = ctx.err ? *ctx.err : std::cerr;
  try {
    fs::create_directories(ctx.out_dir);
    return body(ctx.out ? *ctx.out : std::cout);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace

int exit_code_for(const std::string& code) {
  if (code == "config-invalid") return kExitConfig;
  if (code == "budget-exceeded") return kExitBudget;
  return kExitRuntime;
}

int cmd_run(const CommandContext& ctx) {
  return guarded(ctx, [&](std::ostream& out) {
    const ToolConfig c = load(ctx);
    const EpisodeSetup setup = build_setup(c);
    const auto seeds = c.resolved_seeds();
    const SeedRuns runs = run_all_seeds(c.run, setup, seeds);
    const MetricSummary mean = mean_summary(runs.summaries);

    std::ostringstream csv;
    write_episode_csv(csv, runs.first);
    write_file_atomic(ctx.out_dir / "episode.csv", csv.str());
    ordered_json summary = summary_json(mean, to_json(c));
    summary["seeds"] = seeds;
    write_file_atomic(ctx.out_dir / "summary.json", dump(summary));
    write_manifest(ctx, c);
    out << "mat " << format_number(mean.mat) << "\navg_regret " << format_number(mean.avg_regret)
        << "\n";
    return kExitOk;
  });
}

int cmd_compare(const CommandContext& ctx) {
  return guarded(ctx, [&](std::ostream& out) {
    const ToolConfig c = load(ctx);
    if (c.learners.size() < 2) throw Error("config-invalid", "learners: compare needs at least 2");
    const EpisodeSetup setup = build_setup(c);
    const auto seeds = c.resolved_seeds();

    std::ostringstream csv;
    csv << "learner,mat,avg_regret,avg_regret_normalized\n";
    ordered_json rows = ordered_json::array();
    PlotSpec plot{"Cumulative regret (first seed)", "round", "regret", {}};
    out << "learner          mat        avg_regret\n";
    for (LearnerKind kind : c.learners) {
      RunConfig config = c.run;
      config.learner.learner = kind;
      const SeedRuns runs = run_all_seeds(config, setup, seeds);
      const MetricSummary m = mean_summary(runs.summaries);
      const std::string name = to_string(kind);
      csv << name << ',' << format_number(m.mat) << ',' << format_number(m.avg_regret) << ','
          << format_number(m.avg_regret_normalized) << '\n';
      ordered_json row;
      row["learner"] = name;
      row["mat"] = m.mat;
      row["avg_regret"] = m.avg_regret;
      row["avg_regret_normalized"] = m.avg_regret_normalized;
      row["per_drafter_share"] = m.per_drafter_share;
      rows.push_back(row);
      plot.series.push_back(thin(name, cumulative_regret(runs.first)));
      out << name << std::string(name.size() < 17 ? 17 - name.size() : 1, ' ') << format_number(m.mat)
          << "  " << format_number(m.avg_regret) << '\n';
    }
    ordered_json doc;
    doc["rows"] = rows;
    doc["seeds"] = seeds;
    doc["config"] = to_json(c);
    write_file_atomic(ctx.out_dir / "comparison.csv", csv.str());
    write_file_atomic(ctx.out_dir / "comparison.json", dump(doc));
    write_file_atomic(ctx.out_dir / "regret.svg", render_svg(plot));
    write_manifest(ctx, c);
    return kExitOk;
  });
}

int cmd_scale(const CommandContext& ctx) {
  return guarded(ctx, [&](std::ostream& out) {
    const ToolConfig c = load(ctx);
    const auto seeds = c.resolved_seeds();
    const auto rows = run_pool_scaling_sweep(c.run, c.pool_sizes, c.learners, seeds);

    std::ostringstream csv;
    csv << "pool_size,learner,mat,avg_regret\n";
    PlotSpec plot{"MAT vs pool size", "pool size N", "MAT", {}};
    for (LearnerKind kind : c.learners) plot.series.push_back(Series{to_string(kind), {}, {}});
    for (const auto& r : rows) {
      csv << r.pool_size << ',' << to_string(r.learner) << ',' << format_number(r.mean.mat) << ','
          << format_number(r.mean.avg_regret) << '\n';
      for (std::size_t k = 0; k < c.learners.size(); ++k) {
        if (c.learners[k] == r.learner) {
          plot.series[k].x.push_back(static_cast<double>(r.pool_size));
          plot.series[k].y.push_back(r.mean.mat);
        }
      }
    }
    write_file_atomic(ctx.out_dir / "scaling.csv", csv.str());
    write_file_atomic(ctx.out_dir / "mat_vs_n.svg", render_svg(plot));
    write_manifest(ctx, c);
    out << csv.str();
    return kExitOk;
  });
}

int cmd_censor(const CommandContext& ctx) {
  return guarded(ctx, [&](std::ostream& out) {
    const ToolConfig c = load(ctx);
    const CensoringReport r = run_censoring_study(c.censoring());
    ordered_json doc;
    doc["drafter1_uncensored_length"] = r.drafter1.uncensored_length;
    doc["drafter1_censored_length_at_2"] = r.drafter1.censored_length_at_2;
    doc["drafter2_uncensored_length"] = r.drafter2.uncensored_length;
    doc["drafter2_censored_length_at_2"] = r.drafter2.censored_length_at_2;
    doc["chunk_level_share"] = r.chunk_level_share;
    doc["token_level_share"] = r.token_level_share;
    doc["chunk_level_majority"] = r.chunk_level_majority;
    doc["token_level_majority"] = r.token_level_majority;
    doc["config"] = to_json(c);
    write_file_atomic(ctx.out_dir / "censor.json", dump(doc));
    write_manifest(ctx, c);
    out << "drafter 1 length " << format_number(r.drafter1.uncensored_length) << " censored@2 "
        << format_number(r.drafter1.censored_length_at_2) << '\n'
        << "drafter 2 length " << format_number(r.drafter2.uncensored_length) << " censored@2 "
        << format_number(r.drafter2.censored_length_at_2) << '\n'
        << "chunk-level share " << format_number(r.chunk_level_share[0]) << ' '
        << format_number(r.chunk_level_share[1]) << '\n'
        << "token-level share " << format_number(r.token_level_share[0]) << ' '
        << format_number(r.token_level_share[1]) << '\n';
    return kExitOk;
  });
}

int cmd_oracle(const CommandContext& ctx) {
  return guarded(ctx, [&](std::ostream& out) {
    const ToolConfig c = load(ctx);
    const std::size_t k = c.run.scenario.draft_depth;
    const std::size_t branch = c.run.scenario.branch_factor;
    if (c.study == Study::censor) {
      const CensoringConfig cc = c.censoring();
      const std::vector<DrafterSpec> pool = {
          DrafterSpec{0, AcceptanceProcess(cc.drafter1), "drafter-1"},
          DrafterSpec{1, AcceptanceProcess(cc.drafter2), "drafter-2"}};
      for (const auto& d : pool) {
        out << d.label << " expected_length "
            << format_number(brute_expected_accept_length(nullptr, d, {}, k, c.run.mechanism, branch))
            << " censored_estimate_at_2 "
            << format_number(exact_estimator_expectation(nullptr, d, {}, 2, c.run.mechanism, branch))
            << '\n';
      }
      return kExitOk;
    }
    const EpisodeSetup setup = build_setup(c);
    const ConditionalModel& target = *setup.target;
    const auto direct = target_sequence_distribution(target, setup.prompt, c.oracle_length);
    for (std::size_t i = 0; i < setup.pool.size(); ++i) {
      const auto& d = setup.pool[i];
      const auto spec = brute_output_distribution(target, setup.pool, fixed_policy(i, setup.pool.size()),
                                                  setup.prompt, c.oracle_length, k, c.run.mechanism,
                                                  branch);
      out << d.label << " expected_length "
          << format_number(brute_expected_accept_length(&target, d, setup.prompt, k, c.run.mechanism, branch))
          << " estimator_expectation "
          << format_number(exact_estimator_expectation(&target, d, setup.prompt, k, c.run.mechanism, branch))
          << " output_tv " << format_number(distribution_tv(spec, direct)) << '\n';
    }
    const auto rr = brute_output_distribution(target, setup.pool, round_robin_policy(setup.pool.size()),
                                              setup.prompt, c.oracle_length, k, c.run.mechanism, branch);
    out << "round_robin output_tv " << format_number(distribution_tv(rr, direct)) << '\n';
    return kExitOk;
  });
}

namespace {

template <class T, class Fn>
std::vector<T> split_list(const std::string& flag, const std::string& text, Fn parse) {
  std::vector<T> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) throw Error("config-invalid", flag + ": empty list entry");
    out.push_back(parse(item));
  }
  if (out.empty()) throw Error("config-invalid", flag + ": empty list");
  return out;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Online drafter selection for speculative decoding"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  CommandContext ctx;
  std::string seeds_text;
  std::string learners_text;
  struct Verb {
    const char* name;
    const char* help;
    int (*fn)(const CommandContext&);
  };
  const std::vector<Verb> verbs = {
      {"run", "Run episodes and write episode.csv, summary.json, manifest.json", cmd_run},
      {"compare", "Compare learners on common seeds", cmd_compare},
      {"scale", "MAT vs drafter pool size", cmd_scale},
      {"censor", "Chunk-level vs token-level censoring study", cmd_censor},
      {"oracle", "Print exact oracle values for a small instance", cmd_oracle},
  };
  std::vector<CLI::App*> subs;
  for (const auto& v : verbs) {
    CLI::App* sub = app.add_subcommand(v.name, v.help);
    sub->add_option("--config", ctx.config_path, "Config JSON (or a run manifest)")->required();
    sub->add_option("--out", ctx.out_dir, "Output directory");
    sub->add_option("--seeds", seeds_text, "Comma-separated seeds");
    sub->add_option("--learners", learners_text, "Comma-separated learners");
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  try {
    if (!seeds_text.empty()) {
      ctx.overrides.seeds = split_list<std::uint64_t>("--seeds", seeds_text, [](const std::string& s) {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
          v = std::stoull(s, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != s.size() || s.front() == '-') throw Error("config-invalid", "--seeds: bad seed '" + s + "'");
        return static_cast<std::uint64_t>(v);
      });
    }
    if (!learners_text.empty()) {
      ctx.overrides.learners = split_list<LearnerKind>("--learners", learners_text, parse_learner_kind);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  for (std::size_t i = 0; i < verbs.size(); ++i) {
    if (subs[i]->parsed()) return verbs[i].fn(ctx);
  }
  return kExitConfig;
}

}  // namespace draftsel
