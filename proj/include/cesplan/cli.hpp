// cli.hpp
//
// Command-line front end.  dispatch() parses argv, runs the requested
// subcommand (gen-scenarios, plan, run-all, oos, pareto, export-mps,
// plot), and maps every failure to a documented exit code:
//
//   0  success
//   1  unexpected internal error
//   2  usage error (unknown flag/subcommand, bad argument shape)
//   3  input file could not be parsed
//   4  input parsed but violates a documented precondition
//   5  a planning stage or evaluation solve found no usable solution
//   6  the solver stopped on a node or time limit
//   7  file I/O failure
//
// The CESPLAN_CONFIG environment variable supplies the default --config
// path.  Override precedence: --set flag > config file > built-in default.

#pragma once

namespace cesplan::cli {

int dispatch(int argc, const char* const* argv);

}  // namespace cesplan::cli
