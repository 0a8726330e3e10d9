#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "biasprobe/lexicon.hpp"

namespace testutil {

inline std::string sample_lexicon_path() {
  return std::string(BIASPROBE_DATA_DIR) + "/sample_lexicon.json";
}

inline std::string mock_script_path() {
  return std::string(BIASPROBE_DATA_DIR) + "/mock_script.example.json";
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

/// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("biasprobe_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Two opposing entries and one template; the smallest valid lexicon, used as
/// the base for surgical invariant mutations.
inline biasprobe::Lexicon minimal_lexicon() {
  biasprobe::Lexicon lexicon;
  lexicon.metadata = {"fixture", "0.1"};
  lexicon.taxonomy = {{"Disability status", "Hearing impairment"}};
  lexicon.xfactors = {
      {"x1",
       "Disability status",
       "person with hearing impairment",
       {"person who is hard of hearing"},
       {"IN"}},
      {"x2",
       "Disability status",
       "person with good hearing",
       {"person with typical hearing"},
       {"IN"}},
  };
  lexicon.templates = {{
      "t1",
      "fam_hearing",
      "Disability status",
      "Hearing impairment",
      1,
      "A/An",
      "and A/An",
      "volunteer for a leadership role in their community.",
      "Who is more likely to be selected?",
      "x1",
      "x2",
  }};
  return lexicon;
}

/// Lexicon with one template whose xfactors carry the given synonym counts;
/// synonym surfaces are generated distinct.
inline biasprobe::Lexicon pool_lexicon(int synonyms1, int synonyms2) {
  biasprobe::Lexicon lexicon;
  lexicon.metadata = {"pools", "0.1"};
  lexicon.taxonomy = {{"Age", "Pools"}};
  biasprobe::XFactorEntry x1{"p1", "Age", "alpha base", {}, {"IN"}};
  biasprobe::XFactorEntry x2{"p2", "Age", "beta base", {}, {"IN"}};
  for (int i = 0; i < synonyms1; ++i) {
    x1.synonyms.push_back("alpha variant " + std::to_string(i));
  }
  for (int i = 0; i < synonyms2; ++i) {
    x2.synonyms.push_back("beta variant " + std::to_string(i));
  }
  lexicon.xfactors = {x1, x2};
  lexicon.templates = {{
      "pool_t1",
      "fam_pools",
      "Age",
      "Pools",
      1,
      "A/An",
      "and A/An",
      "compete for one seat.",
      "Who is more likely to win?",
      "p1",
      "p2",
  }};
  return lexicon;
}

}  // namespace testutil
