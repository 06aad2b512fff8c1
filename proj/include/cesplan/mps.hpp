// mps.hpp
//
// MPS export/import for the MILP container, so models can be handed to an
// external solver.  The writer mangles row/column names to the classic
// 8-character budget (R0000001, C0000001, OBJ) and emits a sidecar
// `<path>.names.csv` mapping them back; values are written with full
// round-trip precision, which can overflow the historical fixed columns,
// so the bundled reader splits fields on whitespace instead of positions.

#pragma once

#include <cstdint>
#include <string>

#include "cesplan/milp.hpp"

namespace cesplan::mps {

// Result of reading an MPS file.  `objective` is the name of the N row;
// an RHS entry on the objective row (a constant term some files carry) is
// preserved separately since the container has no constant.
struct MpsModel {
    milp::MilpProblem problem;
    std::string objective;
    double objective_constant = 0.0;
};

// Write `p` minimizing `objective`.  Every column gets explicit BOUNDS
// records (FX/FR/MI/LO/UP) and integer columns sit inside INTORG/INTEND
// markers in their original order.  When `write_name_map` is set, the
// sidecar name map is written next to the file.
void write_mps(const milp::MilpProblem& p, const std::string& objective, const std::string& path,
               bool write_name_map = true);

// Read an MPS file (sections NAME/ROWS/COLUMNS/RHS/RANGES/BOUNDS/ENDATA,
// '*' comments).  RANGES rows are split into <=/>= pairs.  Column and row
// order follows first appearance, which preserves the writer's order.
MpsModel read_mps(const std::string& path);

// Order-independent structural digest of (columns, rows, one objective):
// bounds, integrality, senses, right-hand sides and coefficient lists with
// duplicates merged and exact zeros dropped.  Equal digests before a write
// and after the matching read mean the model survived the trip bit-exactly.
std::uint64_t problem_digest(const milp::MilpProblem& p, const std::string& objective);

}  // namespace cesplan::mps
