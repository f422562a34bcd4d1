// sim: command-line front end. Every subcommand prints one JSON document on
// success and a single "error: ..." line with a nonzero exit otherwise.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include "CLI11.hpp"
#include "mmosim/analytics.hpp"
#include "mmosim/api.hpp"
#include "mmosim/datagen.hpp"
#include "mmosim/hash.hpp"
#include "mmosim/persistence.hpp"
#include "mmosim/runner.hpp"
#include "mmosim/serialize.hpp"

using namespace mmosim;
using nlohmann::json;

namespace {

struct Shared {
  std::optional<std::uint64_t> seed;
  std::string config = "default";
  std::string out;
};

void add_shared(CLI::App* cmd, Shared& s, bool out_required = false) {
  cmd->add_option("--seed", s.seed, "Random seed (overrides the config)");
  cmd->add_option("--config", s.config, "Shipped config name or config file")->capture_default_str();
  auto* o = cmd->add_option("--out", s.out, "Output path");
  if (out_required) o->required();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw SimError(ErrorCode::IoFailure, "cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw SimError(ErrorCode::IoFailure, "cannot write " + p.string());
  out << text;
  if (!out.flush()) throw SimError(ErrorCode::IoFailure, "write failed: " + p.string());
}

/// Writes to --out when given, stdout otherwise.
void emit(const std::string& out, const json& doc) {
  if (out.empty()) std::cout << doc.dump(2) << "\n";
  else write_file(out, doc.dump(2) + "\n");
}

RunConfig cli_config(const Shared& s) {
  json doc = named_or_file_document(s.config);
  if (s.seed) doc["seed"] = *s.seed;
  return load_config(doc);
}

json run_summary(RunDriver& d) {
  return json{{"run_id", d.sim().config().run_id},
              {"dir", d.dir().string()},
              {"status", to_string(d.record().status)},
              {"steps_done", d.sim().current_step()},
              {"total_steps", d.sim().config().total_steps()},
              {"last_seq", d.sim().next_seq() - 1},
              {"log_hash", log_content_hash(d.log_path())}};
}

struct LoadedRun {
  RunConfig cfg;
  LogContents log;
};

LoadedRun load_run(const fs::path& dir) {
  const RunRecord rec = load_run_record(dir);
  LoadedRun r{load_config(rec.config), read_log(dir / rec.log_path)};
  return r;
}

ClusterTable cluster_table(const std::string& path) {
  if (path.empty()) return default_clusters();
  return clusters_from_json(json::parse(read_file(path)));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mmosim: multi-agent MMO economy simulator"};
  app.require_subcommand(1);
  Shared sh;

  // run
  auto* run = app.add_subcommand("run", "Execute a run to completion");
  add_shared(run, sh, true);
  std::optional<int> days, workers;
  bool pace = false;
  run->add_option("--days", days, "Override total_days");
  run->add_option("--workers", workers, "Planning threads");
  run->add_flag("--pace", pace, "Pace steps by time_acceleration");

  // resume
  auto* resume = app.add_subcommand("resume", "Continue a run from a snapshot");
  add_shared(resume, sh);
  std::string snapshot;
  std::optional<std::int64_t> resume_steps;
  resume->add_option("--snapshot", snapshot, "Snapshot file")->required()->check(CLI::ExistingFile);
  resume->add_option("--steps", resume_steps, "Steps to run (default: to the end)");

  // serve
  auto* serve = app.add_subcommand("serve", "Serve the control plane over HTTP");
  add_shared(serve, sh);
  std::vector<std::string> serve_runs;
  std::string host = "127.0.0.1", static_dir;
  int port = 8080;
  serve->add_option("--run", serve_runs, "Existing run directory (repeatable)");
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--static", static_dir, "Console assets mounted at /console");

  // fit
  auto* fitc = app.add_subcommand("fit", "Fit a battle model from match logs");
  add_shared(fitc, sh, true);
  std::string logs_file;
  FitOptions fopts;
  fitc->add_option("--logs", logs_file, "Match-log file")->required()->check(CLI::ExistingFile);
  fitc->add_option("--min-bin-count", fopts.min_bin_count)->capture_default_str();
  fitc->add_option("--band-lo", fopts.band_lo)->capture_default_str();
  fitc->add_option("--band-hi", fopts.band_hi)->capture_default_str();

  // predict-curve
  auto* pc = app.add_subcommand("predict-curve", "Win-rate and income curve of one class");
  add_shared(pc, sh);
  std::string model_file, class_name;
  int n_max = 40;
  pc->add_option("--model", model_file, "Model parameter file (default: shipped model)");
  pc->add_option("--class", class_name, "Profile class (name or I-V)")->required();
  pc->add_option("--n-max", n_max)->capture_default_str()->check(CLI::Range(1, 10000));

  // datagen
  auto* dg = app.add_subcommand("datagen", "Synthetic data generators");
  dg->require_subcommand(1);
  std::string clusters_file;
  auto* dg_pop = dg->add_subcommand("population", "Player profiles");
  add_shared(dg_pop, sh, true);
  int pop_n = 500;
  dg_pop->add_option("--n", pop_n)->capture_default_str()->check(CLI::PositiveNumber);
  dg_pop->add_option("--clusters", clusters_file, "Cluster table file");
  auto* dg_season = dg->add_subcommand("season", "Train (S1) and holdout (S2) match logs");
  add_shared(dg_season, sh, true);
  SeasonOptions sopts;
  dg_season->add_option("--players-per-class", sopts.players_per_class)->capture_default_str();
  dg_season->add_option("--min-matches", sopts.min_matches)->capture_default_str();
  dg_season->add_option("--max-matches", sopts.max_matches)->capture_default_str();
  dg_season->add_option("--clusters", clusters_file, "Cluster table file");
  auto* dg_traj = dg->add_subcommand("trajectories", "Decision-point corpus from a run log");
  add_shared(dg_traj, sh, true);
  std::string traj_run;
  std::optional<std::int64_t> traj_day;
  dg_traj->add_option("--run", traj_run, "Run directory")->required();
  dg_traj->add_option("--day", traj_day, "Simulated day (default: every day)");

  // eval
  auto* evalc = app.add_subcommand("eval", "Stepwise prediction accuracy");
  add_shared(evalc, sh);
  std::string pred_file, truth_file, eval_policy;
  evalc->add_option("--truth", truth_file, "Trajectory corpus")->required()->check(CLI::ExistingFile);
  auto* pred_opt = evalc->add_option("--pred", pred_file, "Predictions file")->check(CLI::ExistingFile);
  evalc->add_option("--policy", eval_policy, "Predict with replay|majority|heuristic instead")
      ->excludes(pred_opt)
      ->check(CLI::IsMember({"replay", "majority", "heuristic"}));

  // stats
  auto* stats = app.add_subcommand("stats", "Statistics frame at a step");
  add_shared(stats, sh);
  std::string stats_run;
  std::int64_t stats_step = 0;
  std::optional<std::int64_t> stats_window;
  stats->add_option("--run", stats_run, "Run directory")->required();
  stats->add_option("--step", stats_step)->required();
  stats->add_option("--window", stats_window, "Trade-share window in steps (default: one day)");

  // report
  auto* report = app.add_subcommand("report", "Per-day series and intervention reports");
  add_shared(report, sh, true);
  std::string report_run;
  std::optional<std::int64_t> report_window, report_settle;
  report->add_option("--run", report_run, "Run directory")->required();
  report->add_option("--window", report_window, "Window in steps (default: two days)");
  report->add_option("--settle", report_settle, "Settle delay in steps (default: two days)");

  // replay
  auto* replay = app.add_subcommand("replay", "Re-run a recorded run under the replay policy");
  add_shared(replay, sh, true);
  std::string replay_run;
  replay->add_option("--run", replay_run, "Source run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.get_exit_code() ? e.get_exit_code() : 2;
  }

  try {
    if (*run) {
      json doc = named_or_file_document(sh.config);
      if (sh.seed) doc["seed"] = *sh.seed;
      if (days) doc["total_days"] = *days;
      if (workers) doc["workers"] = *workers;
      auto d = RunDriver::create(load_config(doc), sh.out);
      d->set_pacing(pace);
      d->set_status(RunStatus::Running);
      d->run_to_end();
      std::cout << run_summary(*d).dump() << "\n";
    } else if (*resume) {
      auto d = RunDriver::resume(snapshot, sh.out.empty() ? std::nullopt : std::optional<fs::path>(sh.out));
      d->set_status(RunStatus::Running);
      if (resume_steps) {
        d->advance(*resume_steps);
        if (!d->sim().finished()) d->set_status(RunStatus::Paused);
      } else {
        d->run_to_end();
      }
      std::cout << run_summary(*d).dump() << "\n";
    } else if (*serve) {
      RunManager mgr(sh.out.empty() ? fs::path("runs") : fs::path(sh.out));
      for (const auto& r : serve_runs) mgr.open(r);
      ApiServer server(mgr, static_dir.empty() ? std::nullopt : std::optional<fs::path>(static_dir));
      std::signal(SIGINT, [](int) {});
      std::signal(SIGTERM, [](int) {});
      const int bound = server.start(host, port);
      std::cout << json{{"listening", host + ":" + std::to_string(bound)}, {"runs", mgr.run_ids()}}.dump()
                << std::endl;
      pause();
      server.stop();
    } else if (*fitc) {
      const auto logs = match_logs_from_text(read_file(logs_file));
      const BattleModel model = fit(logs, fopts);
      write_file(sh.out, model.to_json().dump(2) + "\n");
      std::cout << json{{"out", sh.out}, {"records", logs.size()}, {"fitted_on", model.fitted_on()}}.dump()
                << "\n";
    } else if (*pc) {
      const BattleModel model = model_file.empty() ? default_battle_model()
                                                   : BattleModel::from_json(json::parse(read_file(model_file)));
      const ProfileClass c = parse_class(class_name);
      json pts = json::array();
      for (const auto& p : predict_curve(model, c, n_max))
        pts.push_back({{"n", p.n}, {"p_win", p.p_win}, {"mean_income", p.mean_income}});
      emit(sh.out, json{{"schema_version", 1}, {"class", roman(c)}, {"n_max", n_max}, {"points", pts}});
    } else if (*dg_pop) {
      const ClusterTable specs = cluster_table(clusters_file);
      const std::uint64_t seed = sh.seed.value_or(1);
      const auto pop = generate_population(specs, pop_n, seed);
      std::string text = json{{"format", "mmosim.population"},
                              {"n", pop_n},
                              {"seed", seed},
                              {"spec_hash", sha256_hex(clusters_to_json(specs).dump())}}
                             .dump() +
                         "\n";
      for (const auto& p : pop) text += json(p).dump() + "\n";
      write_file(sh.out, text);
      std::cout << json{{"out", sh.out}, {"profiles", pop.size()}, {"class_counts", apportion(specs, pop_n)}}.dump()
                << "\n";
    } else if (*dg_season) {
      const ClusterTable specs = cluster_table(clusters_file);
      sopts.seed = sh.seed.value_or(sopts.seed);
      const SeasonLogs logs = generate_season_logs(specs, sopts);
      const std::string spec_hash = sha256_hex(clusters_to_json(specs).dump());
      const fs::path dir = sh.out;
      auto header = [&](int season, const std::vector<MatchRecord>& recs) {
        return json{{"format", "mmosim.matches"},
                    {"season", season},
                    {"seed", sopts.seed},
                    {"spec_hash", spec_hash},
                    {"fingerprint", dataset_fingerprint(recs)}};
      };
      write_file(dir / "s1.jsonl", match_logs_to_text(logs.train, header(1, logs.train)));
      write_file(dir / "s2.jsonl", match_logs_to_text(logs.holdout, header(2, logs.holdout)));
      std::cout << json{{"out", dir.string()}, {"s1_records", logs.train.size()}, {"s2_records", logs.holdout.size()}}
                       .dump()
                << "\n";
    } else if (*dg_traj) {
      const LoadedRun r = load_run(traj_run);
      const int spd = r.log.steps_per_day();
      const auto corpus = traj_day ? export_trajectories(r.log.events, *traj_day, spd, r.log.steps_done)
                                   : export_all_trajectories(r.log.events);
      json header{{"format", "mmosim.trajectories"},
                  {"run_id", r.cfg.run_id},
                  {"seed", r.cfg.seed},
                  {"config_hash", config_hash(r.cfg)},
                  {"steps_per_day", spd}};
      header["day"] = traj_day ? json(*traj_day) : json(nullptr);
      write_file(sh.out, trajectories_to_text(corpus, header));
      std::cout << json{{"out", sh.out}, {"records", corpus.size()}}.dump() << "\n";
    } else if (*evalc) {
      const auto truth = trajectories_from_text(read_file(truth_file), 24);
      std::vector<Prediction> preds;
      if (!pred_file.empty()) {
        preds = predictions_from_text(read_file(pred_file));
      } else if (eval_policy == "majority") {
        preds = majority_predictions(truth);
      } else if (eval_policy == "heuristic") {
        HeuristicPolicy p(cli_config(sh).weights);
        preds = predict_corpus(p, truth, sh.seed.value_or(1));
      } else {
        ReplayPolicy p(truth);
        preds = predict_corpus(p, truth, sh.seed.value_or(1));
      }
      emit(sh.out, stepwise_accuracy(preds, truth).to_json());
    } else if (*stats) {
      const LoadedRun r = load_run(stats_run);
      const StatsFrame f = compute_frame(r.cfg, r.log.events, r.log.steps_done, stats_step,
                                         stats_window.value_or(r.cfg.steps_per_day));
      emit(sh.out, f.to_json());
    } else if (*report) {
      const LoadedRun r = load_run(report_run);
      const int spd = r.cfg.steps_per_day;
      const std::int64_t w = report_window.value_or(2 * spd), settle = report_settle.value_or(2 * spd);
      const fs::path dir = sh.out;
      const auto frames = daily_frames(r.cfg, r.log.events, r.log.steps_done, spd);
      std::string jl, csv = "day,step,gini,activeness,players_total,reserve,burn,npc_spend,tax_burned,informal_trade_share\n";
      for (const auto& f : frames) {
        jl += f.to_json().dump() + "\n";
        std::ostringstream row;
        row << f.step / spd << ',' << f.step << ',' << f.gini << ',' << f.activeness << ',' << f.players_total << ','
            << f.reserve << ',' << f.burn << ',' << f.npc_spend << ',' << f.tax_burned << ',';
        if (f.informal_trade_share) row << *f.informal_trade_share;
        csv += row.str() + "\n";
      }
      write_file(dir / "daily.jsonl", jl);
      write_file(dir / "daily.csv", csv);
      json written = json::array({"daily.jsonl", "daily.csv"});
      json shares = json::array();
      for (const auto& e : r.log.events) {
        const auto* a = e.as<ev::InterventionApplied>();
        if (!a) continue;
        const auto iid = a->intervention.intervention_id;
        const InterventionReport rep = intervention_report(r.log.events, iid, w, settle, spd, r.log.steps_done);
        const std::string name = "intervention_" + std::to_string(iid) + ".json";
        write_file(dir / name, rep.to_json().dump(2) + "\n");
        written.push_back(name);
        const json rj = rep.to_json();
        shares.push_back({{"intervention_id", iid}, {"pre_share", rj["pre_share"]}, {"post_share", rj["post_share"]}});
      }
      std::cout << json{{"out", dir.string()}, {"files", written}, {"interventions", shares}}.dump() << "\n";
    } else if (*replay) {
      const LoadedRun src = load_run(replay_run);
      const fs::path dir = sh.out;
      const auto corpus = export_all_trajectories(src.log.events);
      const fs::path corpus_path = fs::absolute(dir / "corpus.jsonl");
      write_file(corpus_path, trajectories_to_text(corpus, json{{"format", "mmosim.trajectories"},
                                                                {"run_id", src.cfg.run_id},
                                                                {"steps_per_day", src.cfg.steps_per_day}}));
      json doc = src.cfg.source;
      doc["policy_binding"] = json{{"default", "replay"}};
      doc["replay_corpus"] = corpus_path.string();
      auto d = RunDriver::create(load_config(doc), dir / "run");
      d->set_status(RunStatus::Running);
      d->run_to_end();
      const auto replayed = export_all_trajectories(read_log(d->log_path()).events);
      std::vector<Prediction> preds;
      for (const auto& t : replayed) preds.push_back({t.uid, t.t, t.action});
      json out = run_summary(*d);
      out["accuracy"] = stepwise_accuracy(preds, corpus).accuracy;
      out["decision_points"] = corpus.size();
      std::cout << out.dump() << "\n";
    }
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg)
      if (c == '\n') c = ' ';
    std::cerr << "error: " << msg << "\n";
    return 1;
  }
  return 0;
}
