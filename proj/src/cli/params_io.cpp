#include <cmath>
#include <fstream>
#include <sstream>

#include "supcbi/cli.hpp"
#include "supcbi/errors.hpp"

namespace supcbi::cli {

namespace {

double number(const Json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string(key) + ": missing");
  const Json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(std::string(key) + ": must be a number");
  double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(std::string(key) + ": must be finite");
  return x;
}

}  // namespace

SupCbiParams ParamsFile::model() const {
  try {
    auto p = params_with_D(A, D, TemperedStableMeasure(b, alpha), GammaMixing(eta, beta), xmin);
    p.validate();
    return p;
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("params: ") + e.what());
  }
}

ParamsFile params_file_from(const SupCbiParams& p, double D) {
  return {p.A, p.measure.b, p.measure.alpha, p.mixing.eta, p.mixing.beta, p.xmin, D};
}

ParamsFile params_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("params: expected a JSON object");
  ParamsFile f;
  f.A = number(j, "A_m3a_per_sa_per_h");
  f.b = number(j, "b_s_per_m3");
  f.alpha = number(j, "alpha");
  f.eta = number(j, "eta_per_h");
  f.beta = number(j, "beta");
  f.xmin = number(j, "xmin_m3_per_s");
  f.D = number(j, "D");
  auto p = f.model();
  if (j.contains("B_derived") && !j.at("B_derived").is_null()) {
    double stored = number(j, "B_derived");
    bool ok = p.B == 0.0 ? std::abs(stored) < 1e-12 : std::abs(stored - p.B) <= 1e-2 * p.B;
    if (!ok) {
      std::ostringstream os;
      os << "B_derived: stored " << stored << " disagrees with (1 - D)/M1 = " << p.B;
      throw ConfigError(os.str());
    }
  }
  return f;
}

Json params_to_json(const ParamsFile& f) {
  auto p = f.model();
  Json j;
  j["A_m3a_per_sa_per_h"] = f.A;
  j["b_s_per_m3"] = f.b;
  j["alpha"] = f.alpha;
  j["eta_per_h"] = f.eta;
  j["beta"] = f.beta;
  j["xmin_m3_per_s"] = f.xmin;
  j["D"] = f.D;
  j["B_derived"] = p.B;  // read-only, (1 - D)/M1
  j["U_per_h"] = p.U();
  return j;
}

ParamsFile load_params_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("params: cannot open " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("params: " + path + ": " + e.what());
  }
  if (j.is_object() && j.contains("params") && j.at("params").is_object()) return params_from_json(j.at("params"));
  return params_from_json(j);
}

}  // namespace supcbi::cli
