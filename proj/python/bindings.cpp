// Copyright 2026 The draftsel Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "draftsel/config.hpp"
#include "draftsel/error.hpp"
#include "draftsel/oracle.hpp"
#include "draftsel/report.hpp"

namespace py = pybind11;
using namespace draftsel;

namespace {

Distribution dist(const std::vector<double>& p) { return Distribution(p); }

std::string run_json(const std::string& config_text, std::optional<std::uint64_t> seed) {
  const ToolConfig c = parse_config_text(config_text);
  const EpisodeSetup setup = make_specialist_setup(c.run.scenario);
  const EpisodeLog log = run_episode(c.run, setup, seed.value_or(c.run.scenario.seed));
  auto j = summary_json(summarize(log), to_json(c));
  j["regret"] = cumulative_regret(log);
  j["tokens_generated"] = log.tokens_generated;
  j["target_calls"] = log.target_calls;
  return j.dump();
}

std::string censor_json(const std::string& config_text) {
  const CensoringReport r = run_censoring_study(parse_config_text(config_text).censoring());
  nlohmann::ordered_json j;
  j["drafter1_uncensored_length"] = r.drafter1.uncensored_length;
  j["drafter2_uncensored_length"] = r.drafter2.uncensored_length;
  j["drafter2_censored_length_at_2"] = r.drafter2.censored_length_at_2;
  j["chunk_level_share"] = r.chunk_level_share;
  j["token_level_share"] = r.token_level_share;
  return j.dump();
}

}  // namespace

PYBIND11_MODULE(_draftsel, m) {
  m.doc() = "Online drafter selection for speculative decoding.";
  m.attr("__version__") = std::string(kToolVersion);

  static py::exception<Error> error_type(m, "DraftselError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error_type, e.what());
    }
  });

  m.def("tv_distance", [](const std::vector<double>& p, const std::vector<double>& q) {
    return tv_distance(dist(p), dist(q));
  });
  m.def("overlap_mass", [](const std::vector<double>& p, const std::vector<double>& q) {
    return overlap_mass(dist(p), dist(q));
  });
  m.def("residual_distribution", [](const std::vector<double>& p, const std::vector<double>& q) {
    const auto r = residual_distribution(dist(p), dist(q));
    return std::vector<double>(r.probs().begin(), r.probs().end());
  });
  m.def("top_l", [](const std::vector<double>& q, std::size_t l) { return top_l(dist(q), l); });

  m.def("accept_length_estimate", [](const std::vector<double>& g, std::size_t k) {
    return accept_length_estimate(g, k);
  });
  m.def("length_loss", [](const std::vector<double>& g, std::size_t k) { return length_loss(g, k); });
  m.def("prob_loss", &prob_loss);
  m.def("chunk_length_loss", [](const std::vector<double>& g) { return chunk_length_loss(g); });
  m.def("chunk_prob_loss", [](const std::vector<double>& g) { return chunk_prob_loss(g); });
  m.def("exact_hedge_regret", &exact_hedge_regret, py::arg("loss_matrix"), py::arg("eta"));

  py::class_<Learner>(m, "Learner")
      .def(py::init([](const std::string& kind, std::size_t n_arms, std::optional<std::size_t> horizon,
                       std::optional<double> eta, std::optional<double> exploration) {
             return Learner(LearnerParams{parse_learner_kind(kind), n_arms, horizon, eta, exploration});
           }),
           py::arg("kind"), py::arg("n_arms"), py::arg("horizon") = py::none(),
           py::arg("eta") = py::none(), py::arg("exploration") = py::none())
      .def_property_readonly("full_information", &Learner::full_information)
      .def("predict", &Learner::predict)
      .def("update", [](Learner& l, const std::vector<double>& loss) { l.update(loss); })
      .def("feed", &Learner::feed);

  m.def("_run_json", &run_json, py::arg("config"), py::arg("seed") = py::none());
  m.def("_censor_json", &censor_json, py::arg("config"));
  m.def("_validate_json", [](const std::string& text) { return to_json(parse_config_text(text)).dump(); });
}
