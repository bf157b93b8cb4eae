// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

// Line-protocol paraphrase provider used by the tests. Replies with the
// words of each request in reverse order; with --empty it replies "" and
// with --garbage it replies with a line that is not JSON.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "";
  std::string line;
  while (std::getline(std::cin, line)) {
    if (mode == "--garbage") {
      std::cout << "not json" << std::endl;
      continue;
    }
    const auto text = nlohmann::json::parse(line).at("text").get<std::string>();
    std::istringstream in(text);
    std::vector<std::string> words;
    for (std::string w; in >> w;) words.push_back(w);
    std::string out;
    for (auto it = words.rbegin(); it != words.rend(); ++it) out += (out.empty() ? "" : " ") + *it;
    if (mode == "--empty") out.clear();
    std::cout << nlohmann::json{{"paraphrase", out}}.dump() << std::endl;
  }
}
