#include "cli/catalog.hpp"

#include "cli/config.hpp"

namespace trapsim {

using nlohmann::json;

namespace {

json model(int d, json gamma, double kappa, double rho, double nu) {
  return json{{"d", d}, {"gamma", gamma}, {"kappa", kappa}, {"rho", rho}, {"nu", nu}};
}

json config(const std::string& kind, json m, json ts, long outer, long inner, std::uint64_t seed) {
  return json{{"schema_version", kSchemaVersion},
              {"kind", kind},
              {"model", std::move(m)},
              {"t", std::move(ts)},
              {"budget", {{"n_outer", outer}, {"n_inner", inner}}},
              {"seed", seed}};
}

std::vector<CatalogEntry> build() {
  std::vector<CatalogEntry> out;

  out.push_back({"ac01", "torus joint chain vs matrix exponential", 13.0, json::array()});

  CatalogEntry ac02{"ac02", "four-way cross-estimator consistency", 110.0, json::array()};
  for (double nu : {0.5, 1.0}) {
    auto hard = config("survival-grid", model(1, "inf", 1, 1, nu), {1, 2, 4, 8}, 2000, 400, 21);
    hard["estimators"] = {"direct", "range"};
    ac02.configs.push_back(hard);
    auto soft = config("survival-grid", model(1, 1.0, 1, 1, nu), {1, 2, 4, 8}, 2000, 400, 22);
    soft["estimators"] = {"softrange", "pde"};
    soft["integrator"] = {{"dt", 0.02}};
    ac02.configs.push_back(soft);
  }
  out.push_back(ac02);

  CatalogEntry ac03{"ac03", "Pascal principle", 9.0, json::array()};
  auto pascal = config("pascal-suite", model(1, "inf", 1, 1, 1), {1, 2, 4}, 2000, 200, 31);
  pascal["estimators"] = {"range"};
  ac03.configs.push_back(pascal);
  out.push_back(ac03);

  CatalogEntry ac04{"ac04", "d=1 annealed coefficient", 2.0, json::array()};
  auto d1 = config("pascal-suite", model(1, "inf", 1, 1, 1), {25, 100, 400}, 1000, 100, 41);
  d1["estimators"] = json::array();
  ac04.configs.push_back(d1);
  out.push_back(ac04);

  CatalogEntry ac05{"ac05", "d=2 law shape", 2.0, json::array()};
  auto d2 = config("pascal-suite", model(2, "inf", 0, 1, 1), {25, 100, 400}, 200, 100, 51);
  d2["estimators"] = json::array();
  ac05.configs.push_back(d2);
  out.push_back(ac05);

  CatalogEntry ac06{"ac06", "d=3 exponential lower bound", 8.0, json::array()};
  auto d3 = config("rate-fit", model(3, 1.0, 1, 1, 1), {2, 4, 8}, 2000, 200, 61);
  d3["rate_estimator"] = "softrange";
  d3["fit_model"] = "exponential";
  ac06.configs.push_back(d3);
  out.push_back(ac06);

  CatalogEntry ac07{"ac07", "super-multiplicativity", 20.0, json::array()};
  auto sm = config("survival-grid", model(1, "inf", 1, 1, 1), {1, 2, 4, 8}, 4000, 400, 71);
  sm["estimators"] = {"range"};
  ac07.configs.push_back(sm);
  out.push_back(ac07);

  CatalogEntry ac08{"ac08", "Donsker-Varadhan exponent", 25.0, json::array()};
  auto dv = config("dv-check", model(1, "inf", 1, 1, 1), {100, 1000, 10000}, 20000, 1, 81);
  dv["p"] = 0.5;
  ac08.configs.push_back(dv);
  out.push_back(ac08);

  CatalogEntry ac09{"ac09", "sub-diffusivity trend", 6.0, json::array()};
  auto g = config("gibbs-fluctuation", model(1, "inf", 1, 1, 1), {64, 256, 1024}, 4000, 100, 91);
  g["alpha"] = 0.1;
  g["proposal"] = "confined";
  ac09.configs.push_back(g);
  out.push_back(ac09);

  out.push_back({"ac10", "exponential-moment harnesses", 2.0, json::array()});

  CatalogEntry ac11{"ac11", "PAM internal identities", 12.0, json::array()};
  auto pam = config("pam-crosscheck", model(1, 1.0, 1, 1, 0.5), {5}, 1000, 10, 111);
  pam["integrator"] = {{"dt", 0.01}};
  ac11.configs.push_back(pam);
  out.push_back(ac11);

  CatalogEntry ac12{"ac12", "quenched rate bounds", 3.0, json::array()};
  auto q = config("quenched-rate", model(1, 1.0, 1, 1, 1), {4, 8, 16}, 1, 1, 121);
  q["field_seeds"] = {1201, 1202};
  q["start_sites"] = 1001;
  q["integrator"] = {{"dt", 0.01}};
  ac12.configs.push_back(q);
  out.push_back(ac12);
  return out;
}

}  // namespace

const std::vector<CatalogEntry>& experiment_catalog() {
  static const std::vector<CatalogEntry> catalog = build();
  return catalog;
}

json catalog_json() {
  json out = json::array();
  for (const auto& e : experiment_catalog()) {
    out.push_back({{"id", e.id},
                   {"title", e.title},
                   {"expected_seconds", e.expected_seconds},
                   {"acceptance", "trapping_acceptance --only " + e.id},
                   {"configs", e.configs}});
  }
  return out;
}

}  // namespace trapsim
