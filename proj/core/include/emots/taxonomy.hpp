#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace emots {

// The 26 discrete emotion classes plus "None" (class 26), and the mapping
// from raw attribute keywords to class ids. Lookups are case-insensitive and
// whitespace-trimmed; unknown attributes resolve to "None".
class EmotionTaxonomy {
 public:
  static const EmotionTaxonomy& builtin();

  EmotionTaxonomy(std::vector<std::string> class_names,
                  std::map<std::string, int> mapping);

  int map_attribute(std::string_view attribute) const;
  const std::vector<std::string>& class_names() const { return class_names_; }
  const std::map<std::string, int>& mapping() const { return mapping_; }

 private:
  std::vector<std::string> class_names_;  // 27 entries, index = class id
  std::map<std::string, int> mapping_;    // lowercase attribute -> 0..25
};

int map_attribute(const EmotionTaxonomy& taxonomy, std::string_view attribute);

// Data file: `class_id,class_name,attributes` with the attribute list as a
// single comma-joined quoted field.
EmotionTaxonomy load_taxonomy_csv(const std::filesystem::path& path);
void write_taxonomy_csv(const std::filesystem::path& path, const EmotionTaxonomy& taxonomy);

}  // namespace emots
