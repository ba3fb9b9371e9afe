#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rtbench/backend.hpp"
#include "rtbench/inventory.hpp"
#include "rtbench/report.hpp"
#include "rtbench/scenario.hpp"

namespace rtbench {

// One mode x load cell of the benchmark matrix.
struct MatrixCell {
  TuningMode mode = TuningMode::no_rt;
  LoadSpec load;
  std::string record_path;
};

// The full experiment description: a base client scenario plus the mode and
// load axes. Cells are the cross product, run sequentially so one cell's load
// can never contaminate another's measurements.
struct MatrixSpec {
  ScenarioSpec base;  // role must be client
  std::vector<TuningMode> modes;
  std::vector<LoadSpec> loads;
  std::string output_dir = "results";
  PlanOptions plan_options;
  bool live_tuning = false;  // default: plans are applied to the dry-run backend

  void validate() const;
  std::vector<MatrixCell> cells() const;

  static MatrixSpec from_json(const std::string& text);  // RecordError on bad input
  static MatrixSpec load_file(const std::string& path);
};

struct CellResult {
  MatrixCell cell;
  bool ok = false;
  std::string error;
};

struct MatrixResult {
  std::vector<CellResult> cells;

  std::size_t failures() const;
  bool all_ok() const { return failures() == 0; }
};

// Runs every cell in order: build the cell's tuning plan, apply it, start the
// load, run the client, stop the load, persist the RunRecord. A failing cell
// is recorded and the matrix moves on. Progress lines go to `log` when given.
MatrixResult run_matrix(const MatrixSpec& spec, const SystemInventory& inventory,
                        std::ostream* log = nullptr);

}  // namespace rtbench
