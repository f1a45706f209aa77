// Regenerates a mock fixture from its script:
//   make_mock_fixture <script.json> <fixture.jsonl>

#include <iostream>

#include "mock_script.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: make_mock_fixture <script.json> <fixture.jsonl>\n";
    return 2;
  }
  try {
    const std::filesystem::path script_path = argv[1];
    const auto script = sgforge::json::parse(sgforge::read_text_file(script_path));
    const auto base = std::filesystem::absolute(script_path).parent_path();
    for (const auto& m : sgforge::testing::unscripted_lexemes(script, base))
      std::cerr << "warning: no alignment answer for " << m << "\n";
    sgforge::write_text_file(argv[2], sgforge::testing::mock_fixture_jsonl(sgforge::testing::render_mock_script(script, base)));
  } catch (const std::exception& e) {
    std::cerr << "make_mock_fixture: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
