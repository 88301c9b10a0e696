// Copyright 2026 The plforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// plforge-stubrun [--check] FILE
//
// Checks or runs a program written in the stub test dialect.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "plforge/eval/stub_dialect.hpp"

int main(int argc, char** argv) {
  bool check = false;
  std::string path;
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--check") {
      check = true;
    } else if (path.empty()) {
      path = arg;
    } else {
      std::cerr << "usage: plforge-stubrun [--check] FILE\n";
      return 2;
    }
  }
  if (path.empty()) {
    std::cerr << "usage: plforge-stubrun [--check] FILE\n";
    return 2;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "plforge-stubrun: cannot open " << path << "\n";
    return 2;
  }
  std::ostringstream src;
  src << in.rdbuf();
  return plforge::stub::run_source(src.str(), check, std::cout, std::cerr);
}
