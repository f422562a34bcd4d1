#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mmosim/analytics.hpp"
#include "mmosim/battle.hpp"
#include "mmosim/config.hpp"
#include "mmosim/datagen.hpp"
#include "mmosim/engine.hpp"
#include "mmosim/persistence.hpp"
#include "mmosim/runner.hpp"
#include "mmosim/serialize.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace mmosim;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::handle& o) {
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

RunConfig config_from(const py::object& o) {
  if (py::isinstance<py::str>(o)) return load_named_or_file(o.cast<std::string>());
  return load_config(from_py(o));
}

py::list events_to_py(const std::vector<Event>& events) {
  json arr = json::array();
  for (const auto& e : events) arr.push_back(e);
  return to_py(arr);
}

class PySimulation {
 public:
  explicit PySimulation(const py::object& config) : sim_(std::make_unique<Simulation>(config_from(config))) {}
  explicit PySimulation(std::unique_ptr<Simulation> s) : sim_(std::move(s)) {}

  py::list advance(std::int64_t n) {
    std::vector<Event> evs;
    {
      py::gil_scoped_release release;
      evs = sim_->advance(n);
    }
    log_.insert(log_.end(), evs.begin(), evs.end());
    return events_to_py(evs);
  }

  std::int64_t schedule(const py::object& iv) { return sim_->schedule(from_py(iv).get<Intervention>()); }

  py::dict money_supply() const {
    const Ledger& l = sim_->ledger();
    py::dict d;
    d["players_total"] = l.players_total();
    d["reserve"] = l.reserve();
    d["burn"] = l.burn();
    d["initial_total"] = l.initial_total();
    return d;
  }

  py::object stats(std::int64_t step, std::int64_t window) const {
    return to_py(compute_frame(sim_->config(), log_, sim_->current_step(), step, window).to_json());
  }

  std::string log_hash() const { return events_hash(log_); }

  Simulation& sim() { return *sim_; }
  const std::vector<Event>& log() const { return log_; }

 private:
  std::unique_ptr<Simulation> sim_;
  std::vector<Event> log_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Agent-based game economy simulator";

  py::register_exception<SimError>(m, "SimError", PyExc_RuntimeError);

  py::class_<PySimulation>(m, "Simulation")
      .def(py::init<const py::object&>(), py::arg("config") = py::str("default"),
           "Config as a shipped name, a file path or a dict")
      .def("advance", &PySimulation::advance, py::arg("n") = 1, "Run n steps; returns their events")
      .def("schedule", &PySimulation::schedule, py::arg("intervention"))
      .def("money_supply", &PySimulation::money_supply)
      .def("stats", &PySimulation::stats, py::arg("step"), py::arg("window") = 24)
      .def("log_hash", &PySimulation::log_hash, "Content hash of every event produced so far")
      .def("snapshot", [](PySimulation& s) { return to_py(s.sim().snapshot()); })
      .def_static("restore",
                  [](const py::object& snap) { return PySimulation(Simulation::restore(from_py(snap))); })
      .def("balances", [](PySimulation& s) { return s.sim().ledger().player_balances(); })
      .def("world", [](PySimulation& s) { return to_py(s.sim().world().to_json()); })
      .def_property_readonly("current_step", [](PySimulation& s) { return s.sim().current_step(); })
      .def_property_readonly("total_steps", [](PySimulation& s) { return s.sim().config().total_steps(); })
      .def_property_readonly("finished", [](PySimulation& s) { return s.sim().finished(); });

  m.def("run", [](const py::object& config, const std::string& out) {
    auto d = RunDriver::create(config_from(config), out);
    {
      py::gil_scoped_release release;
      d->run_to_end();
    }
    return log_content_hash(d->log_path());
  }, py::arg("config"), py::arg("out"), "Run to completion into a directory; returns the log hash");

  m.def("log_content_hash", [](const std::string& path) { return log_content_hash(path); });
  m.def("gini", &gini, py::arg("values"));
  m.def("round_half_up_tax", &round_half_up_tax, py::arg("price"), py::arg("tax_rate"));

  m.def("generate_population", [](int n, std::uint64_t seed) {
    json arr = json::array();
    for (const auto& p : generate_population(default_clusters(), n, seed)) arr.push_back(p);
    return to_py(arr);
  }, py::arg("n"), py::arg("seed"));

  m.def("fit_and_evaluate", [](int players_per_class, std::uint64_t seed) {
    SeasonOptions opt;
    opt.players_per_class = players_per_class;
    opt.seed = seed;
    HoldoutReport rep;
    {
      py::gil_scoped_release release;
      const SeasonLogs logs = generate_season_logs(default_clusters(), opt);
      rep = evaluate_holdout(fit(logs.train), logs.holdout, 35);
    }
    py::dict out;
    for (ProfileClass c : kAllClasses) {
      py::dict row;
      row["win_mae"] = rep.win_mae[index_of(c)];
      row["income_rel_error"] = rep.income_rel_error[index_of(c)];
      row["min_bin_samples"] = rep.min_bin_samples[index_of(c)];
      out[py::str(std::string(to_string(c)))] = row;
    }
    return out;
  }, py::arg("players_per_class") = 200, py::arg("seed") = 1,
     "Fit on a synthetic season and score against a fresh holdout season");
}
