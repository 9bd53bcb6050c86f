// Regenerates the committed fixture corpora:
//   separable/      200 posts, every attribution class has its own clue signature
//   temporal_only/  200 posts that differ only in publication date
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <opencv2/imgcodecs.hpp>

#include "CLI11.hpp"
#include "mgca/clues/fixture_providers.hpp"
#include "mgca/common/rng.hpp"
#include "mgca/data/ingest.hpp"
#include "mgca/data/visual.hpp"

namespace fs = std::filesystem;
using namespace mgca;

namespace {

const std::vector<std::string> kEntities{"Morocco", "Pentagon", "Obama",   "Paris",   "Tesla",   "Nairobi", "Berlin",
                                         "UNICEF",  "Kyiv",     "Toyota",  "Amazon",  "Lagos",   "Oxford",  "Vatican",
                                         "Hamburg", "Sydney",   "Chile",   "Boeing",  "Ganges",  "Everest", "Quebec",
                                         "Nokia",   "Madrid",   "Ontario", "Bhutan",  "Jakarta", "Cairo",   "Lisbon"};
const std::vector<std::string> kEvents{"earthquake kills hundreds",  "protest blocks the highway",
                                       "flood displaces families",   "fire destroys a market",
                                       "storm cuts power to homes",  "crowd celebrates a victory",
                                       "bridge collapses into river", "officials open a new hospital",
                                       "drought dries up farmland",  "rescue teams search rubble",
                                       "workers strike over wages",  "volunteers plant a forest"};
// Each fake class carries one constant clue marker, so a linear probe on the
// clue encodings separates the classes.
const std::string kForeignEntity = "Atlantis";
const std::string kStagedEvent = "a staged scene unrelated to the caption";
const std::string kOldTitle = "archive photo of a past disaster";

std::string pick(Rng& rng, const std::vector<std::string>& v) { return v[rng.below(v.size())]; }

/// Writes a small random PNG and returns the hex content hash of its decoded pixels.
std::string write_image(const fs::path& path, Rng& rng) {
  cv::Mat m(24, 24, CV_8UC3);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c)
      for (int k = 0; k < 3; ++k) m.at<cv::Vec3b>(r, c)[k] = static_cast<unsigned char>(rng.below(256));
  if (!cv::imwrite(path.string(), m)) throw Error("cannot write " + path.string());
  return to_hex(load_visual(path).content_hash);
}

void write_config(const fs::path& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
}

const char* kSharedConfig =
    "dataset = \"posts.jsonl\"\n"
    "fixture_table = \"clue_table.json\"\n"
    "providers = \"fixture\"\n"
    "adapters = \"fixture\"\n"
    "# small encoder widths keep the fixture runs fast\n"
    "d_joint = 32\n"
    "d_sem = 32\n"
    "d_manip = 16\n"
    "d_out = 32\n"
    "hidden = 256\n"
    "rep = 16\n"
    "split_ratios = 0.7, 0.1, 0.2\n"
    "split_seed = 7\n"
    "seed = 11\n";

void make_separable(const fs::path& dir) {
  fs::create_directories(dir / "images");
  Rng rng(20230908);
  FixtureTextualEntityProvider ner;
  FixtureClueTable table;
  std::vector<NewsPost> posts;
  const int counts[kNumAttributionClasses] = {60, 28, 28, 28, 28, 28};
  int serial = 0;
  for (int cls = 0; cls < kNumAttributionClasses; ++cls) {
    for (int n = 0; n < counts[cls]; ++n, ++serial) {
      NewsPost p;
      p.id = "sep-" + std::to_string(serial);
      std::string e1 = pick(rng, kEntities), e2 = pick(rng, kEntities);
      while (e2 == e1) e2 = pick(rng, kEntities);
      p.text = e1 + " " + pick(rng, kEvents) + " near " + e2;
      p.visual_ref = "images/" + p.id + ".png";
      p.published_at = *Date::from_ymd(2023, 1 + static_cast<unsigned>(rng.below(12)), 1 + static_cast<unsigned>(rng.below(28)));
      p.platform = static_cast<Platform>(rng.below(4));
      p.label_binary = cls == 0 ? 0 : 1;
      p.label_attribution = cls;

      FixtureImageRecord rec;
      for (const auto& e : ner.entities(p.text)) rec.visual_entities.push_back({e, VisualEntityCategory::landmark});
      rec.event = p.text;
      rec.reverse.title = p.text;
      rec.reverse.earliest_time = Date(p.published_at.days() - std::chrono::days(static_cast<int>(rng.below(10))));
      switch (static_cast<Attribution>(cls)) {
        case Attribution::image_fab:
          rec.manipulation = "spliced";
          break;
        case Attribution::image_noe:
          rec.visual_entities.clear();
          rec.event = "a screenshot of printed text";
          rec.reverse = {};
          break;
        case Attribution::entity_inc:
          rec.visual_entities = {{kForeignEntity, VisualEntityCategory::person}};
          break;
        case Attribution::event_inc:
          rec.event = kStagedEvent;
          break;
        case Attribution::time_inc:
          rec.reverse.earliest_time = Date(p.published_at.days() - std::chrono::days(700 + static_cast<int>(rng.below(2000))));
          rec.reverse.title = kOldTitle;
          break;
        default:
          break;
      }
      table.put(write_image(dir / p.visual_ref, rng), std::move(rec));
      posts.push_back(std::move(p));
    }
  }
  Rng order(5);
  order.shuffle(posts);
  write_posts(dir / "posts.jsonl", posts);
  std::ofstream(dir / "clue_table.json") << table.to_json().dump(1) << '\n';

  write_config(dir / "detect.toml", std::string("task = \"detect\"\n") + kSharedConfig +
                                        "batch_size = 16\nlearning_rate = 1e-3\nepochs = 30\n");
  write_config(dir / "attribute.toml", std::string("task = \"attribute\"\n") + kSharedConfig +
                                           "batch_size = 16\nlearning_rate = 1e-3\nepochs = 50\n");
}

void make_temporal_only(const fs::path& dir) {
  fs::create_directories(dir / "images");
  Rng rng(19700101);
  FixtureTextualEntityProvider ner;
  FixtureClueTable table;
  const std::string text = "Nairobi flood displaces families near Lagos";
  const Date seen = *Date::from_ymd(2021, 3, 14);

  FixtureImageRecord rec;
  for (const auto& e : ner.entities(text)) rec.visual_entities.push_back({e, VisualEntityCategory::landmark});
  rec.event = text;
  rec.reverse.title = text;
  rec.reverse.earliest_time = seen;
  table.put(write_image(dir / "images" / "shared.png", rng), rec);

  std::vector<NewsPost> posts;
  for (int i = 0; i < 200; ++i) {
    const bool fake = i % 2 == 1;
    NewsPost p;
    p.id = "tmp-" + std::to_string(i);
    p.text = text;
    p.visual_ref = "images/shared.png";
    const int gap = static_cast<int>(fake ? 700 + rng.below(1500) : rng.below(10));
    p.published_at = Date(seen.days() + std::chrono::days(gap));
    p.platform = Platform::twitter;
    p.label_binary = fake ? 1 : 0;
    p.label_attribution = fake ? static_cast<int>(Attribution::time_inc) : 0;
    posts.push_back(std::move(p));
  }
  write_posts(dir / "posts.jsonl", posts);
  std::ofstream(dir / "clue_table.json") << table.to_json().dump(1) << '\n';
  write_config(dir / "detect.toml", std::string("task = \"detect\"\n") + kSharedConfig +
                                        "batch_size = 16\nlearning_rate = 1e-3\nepochs = 20\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regenerate the fixture corpora"};
  std::string root = "fixtures";
  app.add_option("root", root, "output directory");
  CLI11_PARSE(app, argc, argv);
  try {
    make_separable(fs::path(root) / "separable");
    make_temporal_only(fs::path(root) / "temporal_only");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
