#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace patent {

// Rows of preformatted cells. `render` pads columns to a common width (first
// column left-aligned, the rest right-aligned); `tsv` joins cells with tabs.
struct TextTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string render() const;
  std::string tsv() const;
};

std::string percent(double fraction, int decimals = 1);
std::string fixed(double value, int decimals);

// Writes `content` so that identical content gives identical bytes on disk.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace patent
