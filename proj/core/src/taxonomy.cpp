#include "emots/taxonomy.hpp"

#include <sstream>
#include <stdexcept>

#include "emots/csv.hpp"
#include "emots/errors.hpp"

namespace emots {

namespace {

struct ClassRow {
  const char* name;
  const char* attributes;  // comma-separated
};

constexpr ClassRow kClasses[26] = {
    {"Affection", "loving, friendly"},
    {"Anger", "anger, furious, resentful, outraged, vengeful"},
    {"Annoyance",
     "annoy, frustrated, irritated, agitated, bitter, insensitive, exasperated, displeased"},
    {"Anticipation", "optimistic, hopeful, imaginative, eager"},
    {"Aversion", "disgusted, horrified, hateful"},
    {"Confident", "confident, proud, stubborn, defiant, independent, convincing"},
    {"Disapproval",
     "disapproving, hostile, unfriendly, mean, disrespectful, mocking, condescending, cunning, "
     "manipulative, nasty, deceitful, conceited, sleazy, greedy, rebellious, petty"},
    {"Disconnection",
     "indifferent, bored, distracted, distant, uninterested, self-centered, lonely, cynical, "
     "restrained, unimpressed, dismissive"},
    {"Disquietment",
     "worried, nervous, tense, anxious, afraid, alarmed, suspicious, uncomfortable, hesitant, "
     "reluctant, insecure, stressed, unsatisfied, solemn, submissive"},
    {"Doubt/Conf", "confused, skeptical, indecisive"},
    {"Embarrassment", "embarrassed, ashamed, humiliated"},
    {"Engagement",
     "curious, serious, intrigued, persistent, interested, attentive, fascinated"},
    {"Esteem", "respectful, grateful"},
    {"Excitement",
     "excited, enthusiastic, energetic, playful, impatient, panicky, impulsive, hasty"},
    {"Fatigue", "tire, sleepy, drowsy"},
    {"Fear", "scared, fearful, timid, terrified"},
    {"Happiness",
     "cheerful, delighted, happy, amused, laughing, thrilled, smiling, pleased, overwhelmed, "
     "ecstatic, exuberant"},
    {"Pain", "pain"},
    {"Peace", "content, relieved, relaxed, calm, quiet, satisfied, reserved, carefree"},
    {"Pleasure",
     "funny, attracted, aroused, hedonistic, pleasant, flattered, entertaining, mesmerized"},
    {"Sadness",
     "sad, melancholy, upset, disappointed, discouraged, grumpy, crying, regretful, "
     "grief-stricken, depressed, heartbroken, remorseful, hopeless, pensive, miserable"},
    {"Sensitivity", "apologetic, nostalgic"},
    {"Suffering", "offended, hurt, insulted, ignorant, disturbed, abusive, offensive"},
    {"Surprise",
     "surprise, surprised, shocked, amazed, startled, astonished, speechless, disbelieving, "
     "incredulous"},
    {"Sympathy",
     "kind, compassionate, supportive, sympathetic, encouraging, thoughtful, understanding, "
     "generous, concerned, dependable, caring, forgiving, reassuring, gentle"},
    {"Yearning",
     "jealous, determined, aggressive, desperate, focused, dedicated, diligent"},
};

std::vector<std::string> split_attributes(std::string_view joined) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in{std::string(joined)};
  while (std::getline(in, cur, ',')) {
    std::string attr = lowercase_trim(cur);
    if (!attr.empty()) out.push_back(std::move(attr));
  }
  return out;
}

}  // namespace

EmotionTaxonomy::EmotionTaxonomy(std::vector<std::string> class_names,
                                 std::map<std::string, int> mapping)
    : class_names_(std::move(class_names)), mapping_(std::move(mapping)) {
  if (class_names_.size() != 27)
    throw ConfigError("taxonomy needs 27 class names (26 + None)");
  std::vector<bool> seen(26, false);
  for (const auto& [attr, id] : mapping_) {
    if (id < 0 || id > 25) throw ConfigError("attribute class id out of range 0..25");
    seen[static_cast<std::size_t>(id)] = true;
  }
  for (std::size_t i = 0; i < 26; ++i)
    if (!seen[i]) throw ConfigError("class " + std::to_string(i) + " has no attributes");
}

const EmotionTaxonomy& EmotionTaxonomy::builtin() {
  static const EmotionTaxonomy instance = [] {
    std::vector<std::string> names;
    std::map<std::string, int> mapping;
    for (int id = 0; id < 26; ++id) {
      names.emplace_back(kClasses[id].name);
      for (auto& attr : split_attributes(kClasses[id].attributes)) {
        if (!mapping.emplace(attr, id).second)
          throw std::logic_error("duplicate attribute in built-in taxonomy: " + attr);
      }
    }
    names.emplace_back("None");
    return EmotionTaxonomy(std::move(names), std::move(mapping));
  }();
  return instance;
}

int EmotionTaxonomy::map_attribute(std::string_view attribute) const {
  const std::string key = lowercase_trim(attribute);
  auto it = mapping_.find(key);
  return it == mapping_.end() ? 26 : it->second;
}

int map_attribute(const EmotionTaxonomy& taxonomy, std::string_view attribute) {
  return taxonomy.map_attribute(attribute);
}

EmotionTaxonomy load_taxonomy_csv(const std::filesystem::path& path) {
  CsvTable table = read_csv(path);
  std::vector<std::string> names(27);
  std::map<std::string, int> mapping;
  bool saw[27] = {};
  for (const auto& row : table.rows) {
    if (row.size() != 3) throw ConfigError("taxonomy row must be class_id,class_name,attributes");
    const long id = parse_integer(row[0]);
    if (id < 0 || id > 26) throw ConfigError("taxonomy class id out of range");
    names[static_cast<std::size_t>(id)] = row[1];
    saw[id] = true;
    if (id == 26) continue;  // "None" carries no attributes
    for (auto& attr : split_attributes(row[2]))
      if (!mapping.emplace(attr, static_cast<int>(id)).second)
        throw ConfigError("duplicate attribute in taxonomy file: " + attr);
  }
  for (int i = 0; i < 27; ++i)
    if (!saw[i]) throw ConfigError("taxonomy file missing class " + std::to_string(i));
  return EmotionTaxonomy(std::move(names), std::move(mapping));
}

void write_taxonomy_csv(const std::filesystem::path& path, const EmotionTaxonomy& taxonomy) {
  // Reassemble per-class attribute lists in a stable (alphabetical) order.
  std::vector<std::vector<std::string>> attrs(27);
  for (const auto& [attr, id] : taxonomy.mapping())
    attrs[static_cast<std::size_t>(id)].push_back(attr);
  std::ostringstream out;
  out << "class_id,class_name,attributes\n";
  for (int id = 0; id < 27; ++id) {
    std::string joined;
    for (std::size_t i = 0; i < attrs[id].size(); ++i) {
      if (i) joined += ", ";
      joined += attrs[id][i];
    }
    out << id << "," << csv_escape(taxonomy.class_names()[static_cast<std::size_t>(id)]) << ","
        << csv_escape(joined) << "\n";
  }
  write_text_file(path, out.str());
}

}  // namespace emots
