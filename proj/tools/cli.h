// Copyright 2026 The paircat-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef PAIRCAT_TOOLS_CLI_H
#define PAIRCAT_TOOLS_CLI_H

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace paircat::cli {

/// Flat key = value file. Blank lines and '#' comments are skipped.
std::map<std::string, std::string> read_config(const std::string &path);

/// "a,b,c" where each item is a value or an inclusive range start:stop:step.
std::vector<std::string> expand_list(const std::string &value);

/// Entry point shared by the executable and the tests. Exit codes: 0 ok, 1 partial, 2 invalid input.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace paircat::cli

#endif
