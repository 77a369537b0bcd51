#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>

#include "quase/pipeline.hpp"

namespace py = pybind11;

namespace {

using quase::Sentence;

Sentence sentence_from(const std::vector<std::string>& tokens) {
  Sentence s;
  s.tokens = tokens;
  return s;
}

std::vector<double> to_std(const quase::Vec& v) {
  return {v.data(), v.data() + v.size()};
}

quase::Vec from_std(const std::vector<double>& v) {
  quase::Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "quase: edit sentences toward a numeric outcome target";

  m.def("tokenize", [](const std::string& text) { return quase::tokenize(text).tokens; });
  m.def("detokenize", [](const std::vector<std::string>& tokens) {
    return quase::detokenize(sentence_from(tokens));
  });

  m.def("jaccard", [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
    return quase::jaccard(sentence_from(a), sentence_from(b));
  });

  m.def(
      "mine_pairs",
      [](const std::vector<std::pair<double, std::vector<std::string>>>& corpus,
         double ji_min, double gap_min) {
        std::vector<quase::RatedSentence> rated;
        rated.reserve(corpus.size());
        for (const auto& [rating, tokens] : corpus) {
          rated.push_back({sentence_from(tokens), rating});
        }
        const auto pairs = quase::mine_pairs(rated, ji_min, gap_min);
        std::vector<std::tuple<int, int, double, double>> out;
        out.reserve(pairs.size());
        for (const auto& p : pairs) {
          out.emplace_back(p.idx_x, p.idx_x_prime, p.jaccard, p.rating_gap);
        }
        return out;
      },
      py::arg("corpus"), py::arg("ji_min") = 0.5, py::arg("gap_min") = 2.0);

  m.def("word_delta",
        [](const std::vector<std::string>& x, const std::vector<std::string>& x_prime) {
          quase::PseudoPair p;
          p.x.sentence = sentence_from(x);
          p.x_prime.sentence = sentence_from(x_prime);
          const auto d = quase::word_delta(p);
          return std::make_pair(d.inc, d.dec);
        });

  m.def("edit_distance",
        [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
          return quase::edit_distance(sentence_from(a), sentence_from(b));
        });
  m.def("mae", &quase::mae, py::arg("ratings"), py::arg("target"));
  m.def("polarity_accuracy",
        [](const std::vector<double>& ratings, const std::string& direction) {
          if (direction != "neg_to_pos" && direction != "pos_to_neg") {
            throw std::invalid_argument("direction must be neg_to_pos or pos_to_neg");
          }
          return quase::polarity_accuracy(ratings,
                                          direction == "neg_to_pos"
                                              ? quase::TransferDirection::kNegToPos
                                              : quase::TransferDirection::kPosToNeg);
        });

  m.def("kl_standard_normal", [](const std::vector<double>& mu,
                                 const std::vector<double>& sigma) {
    return quase::kl_standard_normal(from_std(mu), from_std(sigma));
  });
  m.def("log_density", [](const std::vector<double>& y, const std::vector<double>& mu,
                          const std::vector<double>& sigma) {
    return quase::log_density(from_std(y), from_std(mu), from_std(sigma));
  });

  py::class_<quase::LexiconScorer>(m, "LexiconScorer")
      .def(py::init([](const std::string& path) { return quase::load_lexicon(path); }))
      .def("score",
           [](const quase::LexiconScorer& s, const std::vector<std::string>& tokens) {
             return quase::score_sentence(s, sentence_from(tokens));
           })
      .def("distribution",
           [](const quase::LexiconScorer& s, const std::vector<std::string>& tokens) {
             const auto d = s.distribution(sentence_from(tokens));
             return std::vector<double>(d.probs.begin(), d.probs.end());
           })
      .def("valence", &quase::LexiconScorer::valence);

  py::class_<quase::Model>(m, "Model")
      .def_static("load",
                  [](const std::string& path) { return quase::Model::load(path); })
      .def_property_readonly(
          "vocab_size", [](const quase::Model& model) { return model.vocab().size(); })
      .def("encode_outcome",
           [](const quase::Model& model, const std::vector<std::string>& tokens) {
             Sentence s = sentence_from(tokens);
             model.vocab().index_sentence(s);
             const auto p = model.encode_outcome(s);
             return std::make_pair(to_std(p.mu), to_std(p.sigma));
           })
      .def("encode_content",
           [](const quase::Model& model, const std::vector<std::string>& tokens) {
             Sentence s = sentence_from(tokens);
             model.vocab().index_sentence(s);
             const auto p = model.encode_content(s);
             return std::make_pair(to_std(p.mu), to_std(p.sigma));
           })
      .def("predict_outcome",
           [](const quase::Model& model, const std::vector<double>& y) {
             return model.predict_outcome(from_std(y));
           })
      .def("decode",
           [](const quase::Model& model, const std::vector<double>& y,
              const std::vector<double>& z) {
             return model.decode(from_std(y), from_std(z)).sentence.tokens;
           })
      .def(
          "edit",
          [](const quase::Model& model, const std::vector<std::string>& tokens,
             double target, const std::string& mode, double log_tau, int beam) {
            quase::EditRequest req;
            req.x0 = sentence_from(tokens);
            model.vocab().index_sentence(req.x0);
            if (mode == "target") req.kind = quase::TargetKind::kValue;
            else if (mode == "max") req.kind = quase::TargetKind::kMax;
            else if (mode == "min") req.kind = quase::TargetKind::kMin;
            else throw std::invalid_argument("mode must be target, max, or min");
            req.target = target;
            req.log_tau = log_tau;
            req.beam_width = beam;
            const quase::EditResult r = quase::edit(model, req);
            py::dict out;
            out["tokens"] = r.x_star.tokens;
            out["predicted_outcome"] = r.predicted_outcome;
            out["iterations"] = r.iterations;
            out["feasible"] = r.feasible;
            out["truncated"] = r.truncated;
            return out;
          },
          py::arg("tokens"), py::arg("target") = 3.0, py::arg("mode") = "target",
          py::arg("log_tau") = -100000.0, py::arg("beam") = 1);

  m.def("run_stage", [](const std::string& stage, const std::string& config_path) {
    const quase::Config config = quase::Config::from_file(config_path);
    config.validate_keys(quase::kKnownConfigKeys);
    if (stage == "synth") quase::cmd_synth(config);
    else if (stage == "prepare") quase::cmd_prepare(config);
    else if (stage == "mine") quase::cmd_mine(config);
    else if (stage == "train") quase::cmd_train(config);
    else if (stage == "eval") quase::cmd_eval(config);
    else if (stage == "ablate") quase::cmd_ablate(config);
    else throw std::invalid_argument("unknown stage " + stage);
  });

  m.def("config_hash", [](const std::string& config_path) {
    return quase::Config::from_file(config_path).hash();
  });
}
