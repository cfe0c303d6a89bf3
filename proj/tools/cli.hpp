#pragma once

#include "config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace onboardctl {

/// Process exit codes. Every failure mode has its own value.
enum Exit : int {
    kOk = 0,
    kInternal = 1,         // unexpected exception
    kUsage = 2,            // bad command line
    kBadConfig = 3,        // config, scenario or script rejected
    kNoFile = 4,           // input file missing or unreadable
    kDemoFailed = 5,       // a demo step did not complete
    kLedgerCorrupt = 6,    // verify-ledger found a bad block
    kNotRejected = 7,      // an attack did not provoke its documented error
    kLemmaViolated = 8,    // a security lemma failed or an attacker device registered
};

/// Runs one command line (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const EnvLookup& env = process_env);

} // namespace onboardctl
