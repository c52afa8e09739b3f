#pragma once

namespace inloop::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kIo = 3,
  kDomain = 4,
  kUnstable = 5,
  kStepSize = 6,
};

int run(int argc, char** argv);

}  // namespace inloop::cli
