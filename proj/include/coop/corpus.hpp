#pragma once

// Manifest-driven corpus runner. `dir` must contain manifest.json listing
// programs (with their container, configuration, and expected outcome) and
// negative programs (with the rule expected to reject them).

#include <string>
#include <vector>

namespace coop {

struct CorpusEntry {
    std::string name;
    bool pass = false;
    std::string detail;   // empty when passing
};

struct CorpusReport {
    std::vector<CorpusEntry> entries;
    bool ok = true;
};

CorpusReport run_corpus(const std::string& dir);

} // namespace coop
