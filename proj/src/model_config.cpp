#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "betasched/errors.hpp"
#include "betasched/toydiff.hpp"

namespace betasched {

namespace {

using nlohmann::json;

double number_or(const json &j, const char *key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) {
    throw ParseError(0, std::string("model config field '") + key +
                            "' must be a number");
  }
  return j[key].get<double>();
}

double required_number(const json &j, const char *key) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw ParseError(0, std::string("model config needs numeric field '") + key + "'");
  }
  return j[key].get<double>();
}

std::vector<double> procedural_mean(const json &spec, std::size_t height,
                                    std::size_t width) {
  std::vector<double> mean(height * width, number_or(spec, "offset", 0.0));
  const double two_pi = 2.0 * std::numbers::pi;
  const auto H = static_cast<double>(height);
  const auto W = static_cast<double>(width);

  if (spec.contains("cosines")) {
    if (!spec["cosines"].is_array()) {
      throw ParseError(0, "'cosines' must be an array");
    }
    for (const auto &c : spec["cosines"]) {
      const double fu = required_number(c, "fu");
      const double fv = required_number(c, "fv");
      const double amp = required_number(c, "amp");
      const double phase = number_or(c, "phase", 0.0);
      for (std::size_t m = 0; m < height; ++m) {
        for (std::size_t n = 0; n < width; ++n) {
          mean[m * width + n] +=
              amp * std::cos(two_pi * (fu * static_cast<double>(m) / H +
                                       fv * static_cast<double>(n) / W) +
                             phase);
        }
      }
    }
  }

  if (spec.contains("patch")) {
    const auto &p = spec["patch"];
    const auto row = static_cast<std::int64_t>(required_number(p, "row"));
    const auto col = static_cast<std::int64_t>(required_number(p, "col"));
    const auto size = static_cast<std::int64_t>(required_number(p, "size"));
    const double fu = required_number(p, "fu");
    const double fv = required_number(p, "fv");
    const double amp = required_number(p, "amp");
    const double phase = number_or(p, "phase", 0.0);
    if (row < 0 || col < 0 || size <= 0 ||
        row + size > static_cast<std::int64_t>(height) ||
        col + size > static_cast<std::int64_t>(width)) {
      throw ParseError(0, "texture patch does not fit inside the grid");
    }
    for (auto m = row; m < row + size; ++m) {
      for (auto n = col; n < col + size; ++n) {
        mean[static_cast<std::size_t>(m) * width + static_cast<std::size_t>(n)] +=
            amp * std::cos(two_pi * (fu * static_cast<double>(m) / H +
                                     fv * static_cast<double>(n) / W) +
                           phase);
      }
    }
  }
  return mean;
}

} // namespace

GmmDiffusionModel parse_model_config(const std::string &json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error &e) {
    throw ParseError(0, std::string("model config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(0, "model config must be a JSON object");

  const auto height = static_cast<std::size_t>(required_number(j, "height"));
  const auto width = static_cast<std::size_t>(required_number(j, "width"));

  std::int64_t total_steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  if (j.contains("noise")) {
    const auto &n = j["noise"];
    total_steps = static_cast<std::int64_t>(number_or(n, "total_steps", 1000));
    beta_start = number_or(n, "beta_start", beta_start);
    beta_end = number_or(n, "beta_end", beta_end);
  }

  if (!j.contains("components") || !j["components"].is_array()) {
    throw ParseError(0, "model config needs a 'components' array");
  }
  std::vector<MixtureComponent> comps;
  for (const auto &c : j["components"]) {
    MixtureComponent comp;
    comp.weight = required_number(c, "weight");
    comp.sigma = required_number(c, "sigma");
    if (!c.contains("mean")) throw ParseError(0, "component needs a 'mean'");
    const auto &m = c["mean"];
    if (m.is_array()) {
      for (const auto &v : m) {
        if (!v.is_number()) throw ParseError(0, "inline mean must be numeric");
        comp.mean.push_back(v.get<double>());
      }
    } else if (m.is_object()) {
      comp.mean = procedural_mean(m, height, width);
    } else {
      throw ParseError(0, "component mean must be an array or a descriptor");
    }
    comps.push_back(std::move(comp));
  }
  return GmmDiffusionModel(height, width, std::move(comps),
                           linear_schedule(total_steps, beta_start, beta_end));
}

GmmDiffusionModel load_model_config(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model_config(ss.str());
}

} // namespace betasched
