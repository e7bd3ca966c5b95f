#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qclar/config.hpp"

namespace qclar::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

// Subcommand bodies. They throw ValidationError / IoError; run() maps those to exit codes.
void cmd_gen_data(const ExperimentConfig& cfg, std::ostream& out);
void cmd_train(const ExperimentConfig& cfg, std::ostream& out);
void cmd_simulate(const ExperimentConfig& cfg, std::ostream& out);
void cmd_curve(const ExperimentConfig& cfg, std::ostream& out);

// Full command line, argv[0] included.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qclar::cli
