#include <fstream>
#include <memory>
#include <istream>
#include <ostream>

#include "neurec/models.hpp"
#include "neurec/text.hpp"

namespace neurec::models {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_user(const InteractionMatrix& train, int u) {
  if (u < 0 || u >= train.num_users()) throw ModelError("user index " + std::to_string(u) + " out of range");
}

}  // namespace

std::function<Eigen::VectorXd(int)> make_scorer(const TrainedModel& model, const InteractionMatrix& train) {
  return std::visit(
      overloaded{
          [&](const NeuRecModel& in) -> std::function<Eigen::VectorXd(int)> {
            auto m = std::make_shared<const NeuRecModel>(in);
            if (m->variant == Variant::kUserBased) {
              return [m, &train](int u) { return score_all_user_based(*m, train, u); };
            }
            // Built once; read-only afterwards.
            auto reps = std::make_shared<const Eigen::MatrixXd>(item_representations(*m, train));
            return [m, &train, reps](int u) -> Eigen::VectorXd {
              check_user(train, u);
              return (m->factors.row(u) * (*reps)).transpose();
            };
          },
          [&](const MfModel& in) -> std::function<Eigen::VectorXd(int)> {
            if (in.user_factors.rows() != train.num_users() || in.item_factors.rows() != train.num_items()) {
              throw ModelError("MF model shape does not match the interaction matrix");
            }
            auto m = std::make_shared<const MfModel>(in);
            return [m, &train](int u) -> Eigen::VectorXd {
              check_user(train, u);
              return m->item_factors * m->user_factors.row(u).transpose();
            };
          },
          [&](const SlimModel& in) -> std::function<Eigen::VectorXd(int)> {
            if (in.coefficients.rows() != train.num_items()) {
              throw ModelError("SLIM model shape does not match the interaction matrix");
            }
            auto s = std::make_shared<const Eigen::MatrixXd>(in.coefficients);
            return [s, &train](int u) -> Eigen::VectorXd {
              check_user(train, u);
              Eigen::VectorXd out = Eigen::VectorXd::Zero(train.num_items());
              for (int i : train.row(u)) out += s->row(i).transpose();
              return out;
            };
          },
          [&](const PopularityModel& in) -> std::function<Eigen::VectorXd(int)> {
            if (in.scores.size() != train.num_items()) {
              throw ModelError("popularity vector length does not match the item count");
            }
            return [scores = in.scores, &train](int u) -> Eigen::VectorXd {
              check_user(train, u);
              return scores;
            };
          },
      },
      model);
}

std::size_t count_parameters(const NeuRecModel& model) {
  return model.net.parameter_count() + static_cast<std::size_t>(model.factors.size());
}

std::size_t count_parameters(const MfModel& model) {
  return static_cast<std::size_t>(model.user_factors.size() + model.item_factors.size());
}

std::size_t count_parameters(const SlimModel& model) { return static_cast<std::size_t>(model.coefficients.size()); }

std::size_t count_parameters(const PopularityModel& model) { return static_cast<std::size_t>(model.scores.size()); }

std::size_t count_parameters(const TrainedModel& model) {
  return std::visit([](const auto& m) { return count_parameters(m); }, model);
}

void save_model(const TrainedModel& model, std::ostream& out) {
  std::visit(overloaded{
                 [&](const NeuRecModel& m) {
                   out << "neurec-model 1\n";
                   out << "variant " << to_string(m.variant) << '\n';
                   out << "k " << m.k() << '\n';
                   nn::save_params(m.net, out);
                   nn::write_matrix(out, "factors", m.factors);
                 },
                 [&](const MfModel& m) {
                   out << "neurec-mf 1\n";
                   nn::write_matrix(out, "U", m.user_factors);
                   nn::write_matrix(out, "V", m.item_factors);
                 },
                 [&](const SlimModel& m) {
                   out << "neurec-slim 1\n";
                   out << "n " << m.coefficients.rows() << " l2 " << text::format_double(m.l2_rate) << " l1 "
                       << text::format_double(m.l1_rate) << '\n';
                   for (Eigen::Index r = 0; r < m.coefficients.rows(); ++r) {
                     for (Eigen::Index c = 0; c < m.coefficients.cols(); ++c) {
                       if (m.coefficients(r, c) != 0.0) {
                         out << r << ' ' << c << ' ' << text::format_double(m.coefficients(r, c)) << '\n';
                       }
                     }
                   }
                 },
                 [&](const PopularityModel& m) {
                   out << "neurec-mostpop 1\n";
                   out << "n " << m.scores.size() << '\n';
                   for (Eigen::Index i = 0; i < m.scores.size(); ++i) out << text::format_double(m.scores[i]) << '\n';
                 },
             },
             model);
}

TrainedModel load_model(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || version != 1) throw ModelError("unrecognized model file header");

  if (magic == "neurec-model") {
    std::string key;
    std::string value;
    NeuRecModel m;
    if (!(in >> key >> value) || key != "variant") throw ModelError("model file missing variant");
    m.variant = parse_variant(value);
    int k = 0;
    if (!(in >> key >> k) || key != "k" || k < 1) throw ModelError("model file missing k");
    m.net = nn::load_params(in);
    m.factors = nn::read_matrix(in, "factors");
    if (m.k() != k) throw ModelError("factor matrix width differs from k");
    m.validate();
    return m;
  }
  if (magic == "neurec-mf") {
    MfModel m;
    m.user_factors = nn::read_matrix(in, "U");
    m.item_factors = nn::read_matrix(in, "V");
    if (m.user_factors.cols() != m.item_factors.cols()) throw ModelError("MF factor widths differ");
    return m;
  }
  if (magic == "neurec-slim") {
    std::string kn, kl2, kl1, l2, l1;
    Eigen::Index n = -1;
    if (!(in >> kn >> n >> kl2 >> l2 >> kl1 >> l1) || kn != "n" || kl2 != "l2" || kl1 != "l1" || n < 0) {
      throw ModelError("SLIM model header is malformed");
    }
    SlimModel m;
    m.l2_rate = text::parse_double(l2).value_or(-1.0);
    m.l1_rate = text::parse_double(l1).value_or(-1.0);
    if (m.l2_rate < 0.0 || m.l1_rate < 0.0) throw ModelError("SLIM model rates are malformed");
    m.coefficients = Eigen::MatrixXd::Zero(n, n);
    Eigen::Index r = 0;
    Eigen::Index c = 0;
    std::string v;
    while (in >> r >> c >> v) {
      const auto value = text::parse_double(v);
      if (!value || r < 0 || c < 0 || r >= n || c >= n) throw ModelError("SLIM coordinate entry is malformed");
      if (r == c || *value < 0.0) throw ModelError("SLIM entry violates S >= 0, diag(S) = 0");
      m.coefficients(r, c) = *value;
    }
    if (!in.eof()) throw ModelError("SLIM coordinate entry is malformed");
    return m;
  }
  if (magic == "neurec-mostpop") {
    std::string key;
    Eigen::Index n = -1;
    if (!(in >> key >> n) || key != "n" || n < 0) throw ModelError("mostPOP model header is malformed");
    PopularityModel m;
    m.scores.resize(n);
    std::string v;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(in >> v)) throw ModelError("mostPOP score vector is truncated");
      const auto value = text::parse_double(v);
      if (!value) throw ModelError("mostPOP score '" + v + "' is not a number");
      m.scores[i] = *value;
    }
    return m;
  }
  throw ModelError("unknown model kind '" + magic + "'");
}

void save_model_file(const TrainedModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write model file '" + path + "'");
  save_model(model, out);
  if (!out) throw ModelError("write failed for model file '" + path + "'");
}

TrainedModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file '" + path + "'");
  return load_model(in);
}

}  // namespace neurec::models
