#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace feather::cli {

// Exit codes. Every failure also prints one line to stderr:
//   error[<class>]: <message>
enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,          // unknown flag, missing or malformed argument
  kConfig = 3,         // configuration invariant violated
  kInput = 4,          // bad input data (e.g. phoneme id out of range)
  kIo = 5,             // file missing, unreadable or malformed
  kNumeric = 6,        // NaN / Inf during a computation
  kDimension = 7,      // shape mismatch
  kContract = 8,       // precondition violated
};

// args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace feather::cli
