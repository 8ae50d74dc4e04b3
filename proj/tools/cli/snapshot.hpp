#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "trapping/pam.hpp"
#include "trapping/trapfield.hpp"
#include "trapping/walk.hpp"

namespace trapsim {

inline constexpr int kSnapshotSchema = 1;

nlohmann::json kernel_to_json(const trapping::JumpKernel& k);
trapping::JumpKernel kernel_from_json(const nlohmann::json& j);

/// {schema_version, d, rate, origin, jump_times, displacements, horizon},
/// plus the kernel support unless `with_kernel` is false.
nlohmann::json path_to_json(const trapping::WalkPath& path, bool with_kernel = true);

/// Without a "kernel" entry the path is taken as nearest-neighbour with the
/// recorded rate, unless `kernel` is given.
trapping::WalkPath path_from_json(const nlohmann::json& j, trapping::KernelPtr kernel = nullptr);

/// Spec, initial counts and every trap trajectory.
nlohmann::json field_to_json(const trapping::TrapField& field);
trapping::TrapField field_from_json(const nlohmann::json& j);

/// One row per site and snapshot: time, x1..xd, value.
std::string lattice_csv(const std::vector<trapping::LatticeField<double>>& snapshots);

}  // namespace trapsim
