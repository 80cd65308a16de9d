#include "qfeat/serialize.hpp"

#include <cstdio>

#include "qfeat/error.hpp"

namespace qfeat {

using nlohmann::json;

namespace {

json vector_to_json(const VectorRef& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json matrix_to_json(const MatrixRef& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_to_json(m.row(i).transpose()));
  return rows;
}

Matrix matrix_from_json(const json& j, Eigen::Index cols_if_empty = 0) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return Matrix(0, cols_if_empty);
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].size() == rows.front().size(), "matrix JSON: ragged rows");
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  return m;
}

std::string form_name(ModelForm f) {
  switch (f) {
    case ModelForm::random_features: return "random_features";
    case ModelForm::exact_kernel: return "exact_kernel";
    case ModelForm::linear: return "linear";
  }
  return "linear";
}

ModelForm form_from_name(const std::string& s) {
  if (s == "random_features") return ModelForm::random_features;
  if (s == "exact_kernel") return ModelForm::exact_kernel;
  if (s == "linear") return ModelForm::linear;
  throw ArgumentError("unknown model form: " + s);
}

}  // namespace

json kernel_to_json(const KernelSpec& spec) {
  if (spec.kind == KernelKind::gaussian) return {{"kind", "gaussian"}, {"bandwidth", spec.bandwidth}};
  json j = {{"kind", "spline"}, {"truncation_K", spec.truncation_K}};
  // JSON has no infinity; the constant-kernel limit is written as null.
  if (std::isinf(spec.order_q)) {
    j["order_q"] = nullptr;
  } else {
    j["order_q"] = spec.order_q;
  }
  return j;
}

KernelSpec kernel_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "gaussian") return KernelSpec::gaussian(j.at("bandwidth").get<double>());
  if (kind == "spline") {
    const double q = j.at("order_q").is_null() ? std::numeric_limits<double>::infinity()
                                               : j.at("order_q").get<double>();
    return KernelSpec::spline(q, j.value("truncation_K", std::int64_t{0}));
  }
  throw ArgumentError("unknown kernel kind: " + kind);
}

json loss_to_json(const LossSpec& spec) {
  json j = {{"kind", to_string(spec.kind)}, {"lipschitz_constant", spec.lipschitz_constant()}};
  if (spec.kind == LossKind::check) j["tau"] = spec.tau;
  return j;
}

LossSpec loss_from_json(const json& j) {
  LossSpec s{loss_kind_from_string(j.at("kind").get<std::string>()), j.value("tau", 0.5)};
  s.validate();
  return s;
}

json feature_map_to_json(const FeatureMap& map) {
  json j = {{"kind", to_string(map.kind)},
            {"M", map.size()},
            {"seed", map.seed},
            {"sampling", to_string(map.sampling)},
            {"kernel", kernel_to_json(map.kernel)},
            {"params", matrix_to_json(map.params)},
            {"weights", vector_to_json(map.weights)}};
  if (map.kind == FeatureKind::rff_gaussian) j["phases"] = vector_to_json(map.phases);
  return j;
}

FeatureMap feature_map_from_json(const json& j) {
  try {
    FeatureMap map;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "rff_gaussian") {
      map.kind = FeatureKind::rff_gaussian;
    } else if (kind == "spline_rf") {
      map.kind = FeatureKind::spline_rf;
    } else {
      throw ArgumentError("unknown feature kind: " + kind);
    }
    map.seed = j.at("seed").get<std::uint64_t>();
    map.sampling = sampling_from_string(j.value("sampling", std::string("uniform")));
    map.kernel = kernel_from_json(j.at("kernel"));
    map.params = matrix_from_json(j.at("params"));
    map.weights = vector_from_json(j.at("weights"));
    if (map.kind == FeatureKind::rff_gaussian) map.phases = vector_from_json(j.at("phases"));
    require(map.size() == j.at("M").get<Eigen::Index>(), "feature map JSON: M does not match params");
    map.validate();
    return map;
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("feature map JSON: ") + e.what());
  }
}

std::string feature_map_hash(const FeatureMap& map) {
  const std::string text = feature_map_to_json(map).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json model_to_json(const Model& model) {
  json j = {{"format", "qfeat-model"},
            {"version", 1},
            {"form", form_name(model.form)},
            {"coefficients", vector_to_json(model.coefficients)},
            {"lambda", model.lambda},
            {"diagnostics",
             {{"iterations", model.diagnostics.iterations},
              {"primal_residual", model.diagnostics.primal_residual},
              {"dual_residual", model.diagnostics.dual_residual},
              {"objective", model.diagnostics.objective},
              {"converged", model.diagnostics.converged}}}};
  j["loss"] = model.loss ? loss_to_json(*model.loss) : json(nullptr);
  if (model.form == ModelForm::random_features && model.features) {
    j["feature_map_hash"] = feature_map_hash(*model.features);
    j["feature_map"] = feature_map_to_json(*model.features);
  }
  if (model.form == ModelForm::exact_kernel) {
    j["kernel"] = kernel_to_json(model.kernel);
    j["train_inputs"] = matrix_to_json(model.train_inputs);
  }
  return j;
}

Model model_from_json(const json& j) {
  try {
    require(j.value("format", std::string()) == "qfeat-model", "model JSON: unrecognized format");
    Model model;
    model.form = form_from_name(j.at("form").get<std::string>());
    model.coefficients = vector_from_json(j.at("coefficients"));
    model.lambda = j.at("lambda").get<double>();
    if (!j.at("loss").is_null()) model.loss = loss_from_json(j.at("loss"));
    const json& d = j.at("diagnostics");
    model.diagnostics.iterations = d.at("iterations").get<int>();
    model.diagnostics.primal_residual = d.at("primal_residual").get<double>();
    model.diagnostics.dual_residual = d.at("dual_residual").get<double>();
    model.diagnostics.objective = d.at("objective").get<double>();
    model.diagnostics.converged = d.at("converged").get<bool>();
    if (model.form == ModelForm::random_features) {
      auto map = std::make_shared<FeatureMap>(feature_map_from_json(j.at("feature_map")));
      if (j.contains("feature_map_hash")) {
        require(j.at("feature_map_hash").get<std::string>() == feature_map_hash(*map),
                "model JSON: feature map does not match its hash");
      }
      require(map->size() == model.coefficients.size(), "model JSON: coefficient count != M");
      model.features = std::move(map);
    } else if (model.form == ModelForm::exact_kernel) {
      model.kernel = kernel_from_json(j.at("kernel"));
      model.train_inputs = matrix_from_json(j.at("train_inputs"));
      require(model.train_inputs.rows() == model.coefficients.size(),
              "model JSON: coefficient count != training size");
    }
    return model;
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("model JSON: ") + e.what());
  }
}

json schedule_to_json(const RegularitySpec& spec, std::int64_t n, double C_M, const RateSchedule& s) {
  return {{"r", spec.r},
          {"gamma", spec.gamma},
          {"alpha", spec.alpha},
          {"n", n},
          {"C_M", C_M},
          {"lambda", s.lambda},
          {"lambda_exponent", -1.0 / (2.0 * spec.r + spec.gamma)},
          {"M_min", s.M_min},
          {"feature_exponent", s.feature_exponent},
          {"predicted_rate_exponent", s.predicted_rate_exponent}};
}

}  // namespace qfeat
