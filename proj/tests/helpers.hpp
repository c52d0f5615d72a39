#pragma once

// Small shared helpers for the test suite.

#include <fstream>
#include <sstream>
#include <string>

namespace testutil {

inline std::string source_dir() { return FLOWGEN_SOURCE_DIR; }

inline std::string data_path(const std::string& rel) {
  return source_dir() + "/tests/data/" + rel;
}

inline std::string dataset_dir() { return source_dir() + "/data/flowbench"; }
inline std::string catalog_path() { return source_dir() + "/data/catalog.json"; }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Figure-style worked example used across the suite: a retrieve-repositories
// loop whose inner task is replaced by a create call.
inline const char* kLoopPriorIr =
    "repositories = GitHub_Repository__3_0_0__retrievewithwhere_Repository()\n"
    "for repo in repositories:\n"
    "  new_issue = GitHub_Issue__3_0_0__retrievewithwhere_Issue()";

inline const char* kLoopExpectedIr =
    "repositories = GitHub_Repository__3_0_0__retrievewithwhere_Repository()\n"
    "for repo in repositories:\n"
    "  updated_issue = GitHub_Issue__3_0_0__create_Issue()";

inline const char* kLinearIr =
    "issue = GitHub_Issue__3_0_0__create_Issue()\n"
    "pr = GitHub_Pullrequest__3_0_0__create_Pullrequest()\n"
    "comment = GitHub_Comment__3_0_0__create_Comment()";

}  // namespace testutil
