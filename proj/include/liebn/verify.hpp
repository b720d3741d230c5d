#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "liebn/parallel.hpp"

namespace liebn {

/// Outcome of one property checked over one (family, dim, ...) cell.
struct PropertyResult {
  std::string suite;
  std::string property;  // catalog id, e.g. "spd.group_axioms"
  std::string cell;
  long trials = 0;
  double max_violation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string failing_case;  // inputs of the worst trial, set when failing
  double seconds = 0.0;
};

struct VerifyOptions {
  std::vector<int> dims;  // empty = per-suite defaults
  std::uint64_t seed = 42;
  /// Cells run in parallel (capped by LIEBN_THREADS); inside a cell the work
  /// is sequential-deterministic.
  bool parallel_cells = true;
  /// Test fixture: force the named property's tolerance to zero so the
  /// failure path (exit code 1, failing tuple serialization) can be driven.
  std::string corrupt_property;
};

/// Suite names accepted by run_verify (besides "all").
const std::vector<std::string>& verify_suites();

/// Runs one suite ("geometry", "liebn", "gaussian", "rotation") or "all".
std::vector<PropertyResult> run_verify(const std::string& suite, const VerifyOptions& options);

/// Catalog of module invariants that the registry must exercise.
const std::vector<std::string>& invariant_catalog();

/// Catalog entries with no registered property (must be empty).
std::vector<std::string> missing_coverage();

}  // namespace liebn
