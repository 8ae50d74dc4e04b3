#include "cli/snapshot.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace trapsim {

using nlohmann::json;
using namespace trapping;

namespace {

void check_schema(const json& j, const char* what) {
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + ": expected an object");
  if (j.value("schema_version", 0) != kSnapshotSchema) {
    throw std::invalid_argument(std::string(what) + ": unsupported schema_version");
  }
}

json site_json(const Eigen::Ref<const Eigen::VectorXi>& x) {
  json out = json::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) out.push_back(x[i]);
  return out;
}

Site site_from(const json& j, int dim) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim) throw std::invalid_argument("site of the wrong dimension");
  Site s(dim);
  for (int i = 0; i < dim; ++i) s[i] = j[static_cast<std::size_t>(i)].get<int>();
  return s;
}

}  // namespace

json kernel_to_json(const JumpKernel& k) {
  json steps = json::array();
  for (Eigen::Index c = 0; c < k.displacements().cols(); ++c) steps.push_back(site_json(k.displacements().col(c)));
  return {{"d", k.dim()}, {"rate", k.rate()}, {"displacements", steps}, {"probabilities", k.probabilities()}};
}

JumpKernel kernel_from_json(const json& j) {
  const int d = j.at("d").get<int>();
  const auto& steps = j.at("displacements");
  Eigen::MatrixXi disp(d, static_cast<Eigen::Index>(steps.size()));
  for (std::size_t c = 0; c < steps.size(); ++c) disp.col(static_cast<Eigen::Index>(c)) = site_from(steps[c], d);
  return JumpKernel(disp, j.at("probabilities").get<std::vector<double>>(), j.at("rate").get<double>());
}

json path_to_json(const WalkPath& path, bool with_kernel) {
  const auto& pos = path.positions();
  json steps = json::array();
  for (Eigen::Index c = 1; c < pos.cols(); ++c) steps.push_back(site_json(pos.col(c) - pos.col(c - 1)));
  json out{{"schema_version", kSnapshotSchema},
           {"d", path.dim()},
           {"rate", path.kernel().rate()},
           {"origin", site_json(pos.col(0))},
           {"jump_times", std::vector<double>(path.jump_times().begin(), path.jump_times().end())},
           {"displacements", steps},
           {"horizon", path.horizon()}};
  if (with_kernel) out["kernel"] = kernel_to_json(path.kernel());
  return out;
}

WalkPath path_from_json(const json& j, KernelPtr kernel) {
  check_schema(j, "path");
  const int d = j.at("d").get<int>();
  const double rate = j.at("rate").get<double>();
  if (j.contains("kernel")) {
    kernel = make_kernel(kernel_from_json(j["kernel"]));
  } else if (!kernel) {
    kernel = make_kernel(JumpKernel::simple_symmetric(d, rate));
  }
  if (kernel->dim() != d || kernel->rate() != rate) throw std::invalid_argument("path: kernel does not match record");
  const auto& steps = j.at("displacements");
  Eigen::MatrixXi disp(d, static_cast<Eigen::Index>(steps.size()));
  for (std::size_t c = 0; c < steps.size(); ++c) disp.col(static_cast<Eigen::Index>(c)) = site_from(steps[c], d);
  return WalkPath::from_steps(kernel, site_from(j.at("origin"), d), j.at("horizon").get<double>(),
                              j.at("jump_times").get<std::vector<double>>(), disp);
}

json field_to_json(const TrapField& field) {
  const auto& s = field.spec();
  json counts = json::array();
  for (const auto& [site, n] : field.counts_at_zero()) counts.push_back({{"site", site_json(site)}, {"count", n}});
  json trajectories = json::array();
  for (const auto& path : field.trajectories()) trajectories.push_back(path_to_json(path, false));
  return {{"schema_version", kSnapshotSchema},
          {"d", s.dim},
          {"density", s.density},
          {"horizon", s.horizon},
          {"window_radius", s.window_radius},
          {"epsilon", s.epsilon},
          {"walker_reach", s.walker_reach},
          {"torus_period", s.torus_period ? json(*s.torus_period) : json(nullptr)},
          {"trap_kernel", kernel_to_json(*s.trap_kernel)},
          {"counts", counts},
          {"trajectories", trajectories}};
}

TrapField field_from_json(const json& j) {
  check_schema(j, "field");
  TrapFieldSpec s;
  s.dim = j.at("d").get<int>();
  s.density = j.at("density").get<double>();
  s.horizon = j.at("horizon").get<double>();
  s.window_radius = j.at("window_radius").get<int>();
  s.epsilon = j.at("epsilon").get<double>();
  s.walker_reach = j.at("walker_reach").get<int>();
  if (!j.at("torus_period").is_null()) s.torus_period = j["torus_period"].get<int>();
  s.trap_kernel = make_kernel(kernel_from_json(j.at("trap_kernel")));
  std::vector<WalkPath> paths;
  for (const auto& p : j.at("trajectories")) paths.push_back(path_from_json(p, s.trap_kernel));
  auto field = TrapField::from_trajectories(s, std::move(paths));
  const auto& counts = j.at("counts");
  bool same = counts.size() == field.counts_at_zero().size();
  for (std::size_t i = 0; same && i < counts.size(); ++i) {
    same = site_from(counts[i].at("site"), s.dim) == field.counts_at_zero()[i].first &&
           counts[i].at("count").get<int>() == field.counts_at_zero()[i].second;
  }
  if (!same) throw std::invalid_argument("field: counts disagree with trajectories");
  return field;
}

std::string lattice_csv(const std::vector<LatticeField<double>>& snapshots) {
  std::ostringstream out;
  const int d = snapshots.empty() ? 1 : snapshots.front().box.dim;
  out << "time";
  for (int i = 1; i <= d; ++i) out << ",x" << i;
  out << ",value\n";
  char buf[32];
  for (const auto& f : snapshots) {
    for (std::size_t i = 0; i < f.box.volume(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", f.time);
      out << buf;
      const Site x = f.box.site(i);
      for (int k = 0; k < d; ++k) out << ',' << x[k];
      std::snprintf(buf, sizeof buf, "%.17g", f.values[static_cast<Eigen::Index>(i)]);
      out << ',' << buf << '\n';
    }
  }
  return out.str();
}

}  // namespace trapsim
