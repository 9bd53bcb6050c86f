#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace mgca;
using mgca::testing::TempDir;

namespace {

void write_lines(const std::filesystem::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p);
  for (const auto& l : lines) out << l << '\n';
}

void write_png(const std::filesystem::path& p, int rows = 8, int cols = 8, int type = CV_8UC3, int value = 90) {
  cv::imwrite(p.string(), cv::Mat(rows, cols, type, cv::Scalar::all(value)));
}

std::string record(const std::string& id, int yb, int y, const std::string& visual = "img.png") {
  return nlohmann::json{{"id", id},
                        {"text", "Morocco earthquake kills hundreds"},
                        {"visual_ref", visual},
                        {"published_at", "2023-09-10"},
                        {"platform", "twitter"},
                        {"label_binary", yb},
                        {"label_attribution", y}}
      .dump();
}

std::vector<NewsPost> corpus(const std::vector<int>& class_counts) {
  std::vector<NewsPost> posts;
  for (std::size_t c = 0; c < class_counts.size(); ++c)
    for (int i = 0; i < class_counts[c]; ++i) {
      NewsPost p;
      p.id = "c" + std::to_string(c) + "-" + std::to_string(i);
      p.text = "text";
      p.visual_ref = "v.png";
      p.label_attribution = static_cast<int>(c);
      p.label_binary = c == 0 ? 0 : 1;
      posts.push_back(p);
    }
  return posts;
}

/// Writes an F-frame MJPG video whose frame i is a flat gray of level 10 + 20 i.
void write_video(const std::filesystem::path& p, int frames) {
  cv::VideoWriter w(p.string(), cv::VideoWriter::fourcc('M', 'J', 'P', 'G'), 10, cv::Size(32, 32), true);
  ASSERT_TRUE(w.isOpened());
  for (int i = 0; i < frames; ++i) w.write(cv::Mat(32, 32, CV_8UC3, cv::Scalar::all(10 + 20 * (i % 12))));
}

/// Reference decode: sequential reads, no seeking.
std::vector<cv::Mat> decode_all(const std::filesystem::path& p) {
  cv::VideoCapture cap(p.string());
  std::vector<cv::Mat> frames;
  cv::Mat f;
  while (cap.read(f)) frames.push_back(f.clone());
  return frames;
}

}  // namespace

TEST(PostSchema, ParsesAndNormalizesWhitespace) {
  auto j = nlohmann::json::parse(record("a", 1, 3));
  j["text"] = "  Morocco \t earthquake\n kills  ";
  const auto p = post_from_json(j);
  EXPECT_EQ(p.text, "Morocco earthquake kills");
  EXPECT_EQ(p.platform, Platform::twitter);
  EXPECT_EQ(p.published_at.iso(), "2023-09-10");
  EXPECT_EQ(*p.label_attribution, 3);
}

TEST(PostSchema, RejectsInvalidRecords) {
  auto reason = [](nlohmann::json j) {
    try {
      post_from_json(j);
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  const auto base = nlohmann::json::parse(record("a", 1, 3));
  EXPECT_EQ(reason(nlohmann::json::parse(record("a", 0, 3))), "label inconsistency");
  EXPECT_EQ(reason(nlohmann::json::parse(record("a", 1, 0))), "label inconsistency");
  EXPECT_EQ(reason(nlohmann::json::parse(record("a", 1, 6))), "label_attribution out of range");
  auto blank = base;
  blank["text"] = " \n\t ";
  EXPECT_EQ(reason(blank), "empty text");
  auto platform = base;
  platform["platform"] = "myspace";
  EXPECT_EQ(reason(platform), "unknown platform");
  auto date = base;
  date["published_at"] = "2023-02-30";
  EXPECT_EQ(reason(date), "invalid published_at");
}

TEST(PostSchema, AttributionLabelIsOptional) {
  auto j = nlohmann::json::parse(record("a", 1, 3));
  j.erase("label_attribution");
  EXPECT_FALSE(post_from_json(j).label_attribution);
}

TEST(Ingest, EmptyFileGivesEmptyCollection) {
  TempDir dir;
  write_lines(dir / "d.jsonl", {});
  const auto ds = ingest_dataset(dir / "d.jsonl");
  EXPECT_TRUE(ds.posts.empty());
  EXPECT_EQ(ds.report.accepted, 0u);
  EXPECT_TRUE(ds.report.rejected.empty());
  EXPECT_TRUE(ds.report.flagged.empty());
}

TEST(Ingest, InconsistentLabelsAreRejected) {
  TempDir dir;
  write_png(dir / "img.png");
  write_lines(dir / "d.jsonl", {record("a", 0, 3)});
  const auto ds = ingest_dataset(dir / "d.jsonl");
  EXPECT_EQ(ds.report.accepted, 0u);
  ASSERT_EQ(ds.report.rejected.size(), 1u);
  EXPECT_EQ(ds.report.rejected[0].reason, "label inconsistency");
  EXPECT_EQ(ds.report.rejected[0].line, 1u);
}

TEST(Ingest, MalformedLineCarriesLineNumber) {
  TempDir dir;
  write_png(dir / "img.png");
  write_lines(dir / "d.jsonl", {record("a", 1, 2), "{not json", record("b", 0, 0)});
  const auto ds = ingest_dataset(dir / "d.jsonl");
  EXPECT_EQ(ds.report.accepted, 2u);
  ASSERT_EQ(ds.report.rejected.size(), 1u);
  EXPECT_EQ(ds.report.rejected[0].line, 2u);
  EXPECT_NE(ds.report.rejected[0].reason.find("malformed JSON"), std::string::npos);
}

TEST(Ingest, UnreadableVisualRejectedOrFlagged) {
  TempDir dir;
  write_png(dir / "img.png");
  write_lines(dir / "d.jsonl", {record("a", 1, 2), record("b", 1, 2, "missing.png")});
  const auto strict = ingest_dataset(dir / "d.jsonl", true);
  EXPECT_EQ(strict.posts.size(), 1u);
  ASSERT_EQ(strict.report.rejected.size(), 1u);
  EXPECT_EQ(strict.report.rejected[0].id, "b");
  EXPECT_NE(strict.report.rejected[0].reason.find("visual asset unreadable"), std::string::npos);

  const auto audit = ingest_dataset(dir / "d.jsonl", false);
  EXPECT_EQ(audit.posts.size(), 2u);
  ASSERT_EQ(audit.report.flagged.size(), 1u);
  EXPECT_EQ(audit.report.flagged[0].id, "b");
}

TEST(Ingest, DuplicateIdsRejected) {
  TempDir dir;
  write_png(dir / "img.png");
  write_lines(dir / "d.jsonl", {record("a", 1, 2), record("a", 0, 0)});
  const auto ds = ingest_dataset(dir / "d.jsonl");
  EXPECT_EQ(ds.posts.size(), 1u);
  EXPECT_EQ(ds.report.rejected.size(), 1u);
}

TEST(Ingest, SerializeRoundTrip) {
  TempDir dir;
  write_png(dir / "img.png");
  auto j = nlohmann::json::parse(record("a", 1, 5));
  j["text"] = "  spaced   out text ";
  auto unlabeled = nlohmann::json::parse(record("b", 0, 0));
  unlabeled.erase("label_attribution");
  unlabeled.erase("label_binary");
  unlabeled["platform"] = "Instagram";
  write_lines(dir / "d.jsonl", {j.dump(), unlabeled.dump()});
  const auto first = ingest_dataset(dir / "d.jsonl");
  write_posts(dir / "again.jsonl", first.posts);
  const auto second = ingest_dataset(dir / "again.jsonl");
  ASSERT_EQ(first.posts.size(), 2u);
  EXPECT_EQ(first.posts, second.posts);
  EXPECT_EQ(second.posts[1].platform, Platform::instagram);
}

TEST(Split, TenPostsOneClass) {
  const auto s = stratified_split(corpus({10}), {0.7, 0.1, 0.2}, 1);
  EXPECT_EQ(s.train.size(), 7u);
  EXPECT_EQ(s.val.size(), 1u);
  EXPECT_EQ(s.test.size(), 2u);
}

TEST(Split, DeterministicForSeed) {
  const auto posts = corpus({40, 13, 9, 22});
  const auto a = stratified_split(posts, {0.7, 0.1, 0.2}, 99);
  const auto b = stratified_split(posts, {0.7, 0.1, 0.2}, 99);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, b.val);
  EXPECT_EQ(a.test, b.test);
  const auto c = stratified_split(posts, {0.7, 0.1, 0.2}, 100);
  EXPECT_NE(a.train, c.train);
}

TEST(Split, PartitionAndProportionProperty) {
  Rng rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<int> counts(2 + rng.below(5));
    for (auto& c : counts) c = 3 + static_cast<int>(rng.below(120));
    const auto posts = corpus(counts);
    const double a = rng.uniform(0.05, 0.3), b = rng.uniform(0.05, 0.3);
    const SplitRatios r{1 - a - b, a, b};
    const auto s = stratified_split(posts, r, rng.next());

    std::set<std::string> seen;
    for (auto which : {SplitName::train, SplitName::val, SplitName::test})
      for (const auto& id : s.ids(which)) EXPECT_TRUE(seen.insert(id).second) << "duplicate " << id;
    EXPECT_EQ(seen.size(), posts.size());

    const double n = static_cast<double>(posts.size());
    EXPECT_EQ(s.val.size(), static_cast<std::size_t>(std::llround(n * a)));
    EXPECT_EQ(s.test.size(), static_cast<std::size_t>(std::llround(n * b)));

    for (auto which : {SplitName::train, SplitName::val, SplitName::test}) {
      const auto& ids = s.ids(which);
      if (ids.empty()) continue;
      std::map<int, int> per_class;
      for (const auto& id : ids) ++per_class[std::stoi(id.substr(1))];
      for (std::size_t c = 0; c < counts.size(); ++c) {
        const double expected = counts[c] / n * static_cast<double>(ids.size());
        EXPECT_LE(std::abs(per_class[static_cast<int>(c)] - expected), 1.0 + 1e-9)
            << "class " << c << " trial " << trial;
      }
    }
  }
}

TEST(Split, Errors) {
  EXPECT_THROW(stratified_split(corpus({10, 2}), {0.7, 0.1, 0.2}, 1), Error);
  try {
    stratified_split(corpus({10, 2}), {0.7, 0.1, 0.2}, 1);
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("class too small to stratify"), std::string::npos);
  }
  EXPECT_THROW(stratified_split(corpus({10}), {0.7, 0.1, 0.3}, 1), Error);
  auto unlabeled = corpus({10});
  unlabeled[3].label_attribution.reset();
  EXPECT_THROW(stratified_split(unlabeled, {0.7, 0.1, 0.2}, 1), Error);
}

TEST(Split, ManifestRoundTrip) {
  TempDir dir;
  const auto s = stratified_split(corpus({12, 30}), {0.7, 0.1, 0.2}, 5);
  s.save(dir / "split.json");
  const auto t = DatasetSplit::load(dir / "split.json");
  EXPECT_EQ(s.train, t.train);
  EXPECT_EQ(s.val, t.val);
  EXPECT_EQ(s.test, t.test);
  EXPECT_EQ(s.seed, t.seed);
  const auto j = nlohmann::json::parse(std::ifstream(dir / "split.json"));
  for (const char* k : {"seed", "train", "val", "test"}) EXPECT_TRUE(j.contains(k)) << k;
}

TEST(MiddleFrame, IndexRule) {
  EXPECT_EQ(middle_frame_index(9), 4);
  EXPECT_EQ(middle_frame_index(1), 0);
  EXPECT_EQ(middle_frame_index(10), 5);
}

TEST(MiddleFrame, MatchesReferenceDecoder) {
  TempDir dir;
  Rng rng(17);
  std::vector<int> lengths{1, 9, 10};
  for (int i = 0; i < 5; ++i) lengths.push_back(1 + static_cast<int>(rng.below(24)));
  for (int f : lengths) {
    const auto path = dir / ("v" + std::to_string(f) + ".avi");
    write_video(path, f);
    const auto frames = decode_all(path);
    ASSERT_EQ(static_cast<int>(frames.size()), f);
    const auto mid = extract_middle_frame(path);
    EXPECT_EQ(mid.content_hash, pixel_hash(frames[static_cast<std::size_t>(f / 2)])) << "F=" << f;
    EXPECT_NEAR(cv::mean(mid.pixels)[0], 10 + 20 * ((f / 2) % 12), 3.0) << "F=" << f;
  }
}

TEST(MiddleFrame, StillImagePassesThrough) {
  TempDir dir;
  cv::Mat img(5, 7, CV_8UC3);
  cv::randu(img, 0, 255);
  cv::imwrite((dir / "x.png").string(), img);
  const auto a = extract_middle_frame(dir / "x.png");
  EXPECT_EQ(a.content_hash, pixel_hash(img));
}

TEST(MiddleFrame, UndecodableIsAnError) {
  TempDir dir;
  write_lines(dir / "junk.avi", {"this is not a video"});
  try {
    extract_middle_frame(dir / "junk.avi");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("visual asset unreadable"), std::string::npos);
  }
}

TEST(NormalizeImage, DownscalesTo224) {
  cv::Mat img(448, 448, CV_8UC3);
  cv::randu(img, 0, 255);
  const auto out = normalize_image(make_asset(img, "mem"));
  EXPECT_EQ(out.tensor.rows, 224);
  EXPECT_EQ(out.tensor.cols, 224);
  EXPECT_EQ(out.tensor.channels(), 3);
  EXPECT_EQ(out.tensor.type(), CV_32FC3);
}

TEST(NormalizeImage, Already224KeepsPixels) {
  cv::Mat img(224, 224, CV_8UC3);
  cv::randu(img, 0, 255);
  const auto out = normalize_image(make_asset(img, "mem"), {0.f, 255.f});
  ASSERT_EQ(out.tensor.size(), cv::Size(224, 224));
  for (int r = 0; r < 224; r += 37)
    for (int c = 0; c < 224; c += 41)
      for (int k = 0; k < 3; ++k)  // stored RGB, input BGR
        EXPECT_FLOAT_EQ(out.tensor.at<cv::Vec3f>(r, c)[k], img.at<cv::Vec3b>(r, c)[2 - k]);
}

TEST(NormalizeImage, GrayscaleReplicatedAgainstBlockMeanOracle) {
  cv::Mat gray(448, 448, CV_8UC1);
  cv::randu(gray, 0, 255);
  const auto out = normalize_image(make_asset(gray, "mem"), {0.f, 255.f});
  ASSERT_EQ(out.tensor.channels(), 3);
  // An exact 2x downscale by area averaging is the mean of each 2x2 block.
  double oracle = 0;
  for (int r = 0; r < 448; r += 2)
    for (int c = 0; c < 448; c += 2)
      oracle += (gray.at<unsigned char>(r, c) + gray.at<unsigned char>(r + 1, c) + gray.at<unsigned char>(r, c + 1) +
                 gray.at<unsigned char>(r + 1, c + 1)) /
                4.0;
  oracle /= 224.0 * 224.0;
  const auto means = cv::mean(out.tensor);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(means[k], oracle, 0.5) << "channel " << k;
  EXPECT_DOUBLE_EQ(means[0], means[1]);
  EXPECT_DOUBLE_EQ(means[1], means[2]);
}

TEST(NormalizeImage, ScalesToAdapterRange) {
  cv::Mat img(10, 10, CV_8UC3, cv::Scalar(0, 255, 51));
  const auto out = normalize_image(make_asset(img, "mem"), {-1.f, 1.f});
  const auto px = out.tensor.at<cv::Vec3f>(100, 100);
  EXPECT_NEAR(px[0], 51 / 255.0 * 2 - 1, 1e-5);  // R
  EXPECT_NEAR(px[1], 1.0, 1e-5);                 // G
  EXPECT_NEAR(px[2], -1.0, 1e-5);                // B
}

TEST(NormalizeImage, ZeroAreaIsAnError) {
  EXPECT_THROW(normalize_image(make_asset(cv::Mat(), "empty")), Error);
  EXPECT_THROW(normalize_image(make_asset(cv::Mat(0, 5, CV_8UC3), "empty")), Error);
}
