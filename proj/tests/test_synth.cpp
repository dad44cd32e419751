#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "duoclr/augment.hpp"
#include "duoclr/synth.hpp"

#include "helpers.hpp"

using namespace duoclr;

TEST_CASE("synthetic clips are deterministic in all seeds") {
  const auto a = synth_trimmed(2, 20, 0.05, 111, 222);
  const auto b = synth_trimmed(2, 20, 0.05, 111, 222);
  CHECK(a.sequence.data == b.sequence.data);
  CHECK(a.action_label == 2);
  CHECK(a.sequence.frames == 20);
  CHECK(a.sequence.joints == 16);

  CHECK(synth_trimmed(2, 20, 0.05, 112, 222).sequence.data != a.sequence.data);
  CHECK(synth_trimmed(2, 20, 0.05, 111, 223).sequence.data != a.sequence.data);
  CHECK(synth_trimmed(3, 20, 0.05, 111, 222).sequence.data != a.sequence.data);

  CHECK_THROWS_WITH(synth_trimmed(0, 7, 0.0, 1, 2),
                    Catch::Matchers::ContainsSubstring("clip too short"));
  CHECK_THROWS_WITH(synth_trimmed(-1, 20, 0.0, 1, 2),
                    Catch::Matchers::ContainsSubstring("label out of range"));
}

TEST_CASE("same motion under two cameras differs by one similarity transform") {
  // The camera acts after motion and noise, so two camera seeds over the
  // same motion stream give frame sets related by a single rigid+scale map.
  const auto a = synth_trimmed(1, 15, 0.05, 900, 77).sequence;
  const auto b = synth_trimmed(1, 15, 0.05, 901, 77).sequence;

  const auto tr = estimate_similarity_transform(frame_of(b, 0), frame_of(a, 0));
  for (int t = 0; t < a.frames; ++t) {
    const Frame fa = frame_of(a, t);
    const Frame fb = frame_of(b, t);
    for (std::size_t v = 0; v < fa.size(); ++v) {
      const auto q = tr.apply(fa[v]);
      for (int c = 0; c < 3; ++c)
        CHECK_THAT(q[static_cast<std::size_t>(c)],
                   Catch::Matchers::WithinAbs(fb[v][static_cast<std::size_t>(c)], 1e-4));
    }
  }
}

TEST_CASE("noise-free clips of one class trace smooth sinusoids") {
  const auto clean = synth_trimmed(0, 32, 0.0, 5, 6).sequence;
  const auto noisy = synth_trimmed(0, 32, 0.1, 5, 6).sequence;
  double diff = 0.0;
  for (std::size_t i = 0; i < clean.data.size(); ++i)
    diff = std::max(diff, static_cast<double>(std::abs(clean.data[i] - noisy.data[i])));
  CHECK(diff > 1e-3);  // noise actually lands

  // Frame-to-frame displacement of the clean clip stays small and smooth.
  for (int t = 1; t < clean.frames; ++t)
    for (int v = 0; v < clean.joints; ++v)
      for (int c = 0; c < 3; ++c)
        CHECK(std::abs(clean.at(t, v, c) - clean.at(t - 1, v, c)) < 0.3);
}

TEST_CASE("untrimmed videos tile their clips with aligned annotations") {
  const std::vector<int> classes = {3, 0, 2};
  const UntrimmedVideo v = synth_untrimmed(classes, 12, 0.02, 42, TaskKind::multiclass);
  CHECK(v.task_kind == TaskKind::multiclass);
  CHECK(v.sequence.frames == 36);
  REQUIRE(v.segments.size() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(v.segments[static_cast<std::size_t>(k)].action_class == classes[static_cast<std::size_t>(k)]);
    CHECK(v.segments[static_cast<std::size_t>(k)].start == 12 * k);
    CHECK(v.segments[static_cast<std::size_t>(k)].end == 12 * (k + 1));
  }
  CHECK_NOTHROW(validate_video(v, 4));

  const UntrimmedVideo v2 = synth_untrimmed(classes, 12, 0.02, 42, TaskKind::multiclass);
  CHECK(v2.sequence.data == v.sequence.data);

  CHECK_THROWS_WITH(synth_untrimmed({}, 12, 0.0, 1, TaskKind::multiclass),
                    Catch::Matchers::ContainsSubstring("empty class_list"));
}

TEST_CASE("multilabel videos sometimes overlay a second concurrent class") {
  bool saw_overlay = false, saw_plain = false;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const UntrimmedVideo v =
        synth_untrimmed({0, 1, 2}, 10, 0.02, seed, TaskKind::multilabel);
    CHECK(v.sequence.frames == 30);
    REQUIRE(v.segments.size() >= 3);
    CHECK_NOTHROW(validate_video(v, 3));
    if (v.segments.size() > 3) saw_overlay = true;
    if (v.segments.size() == 3) saw_plain = true;
    // Overlays share their tile exactly and never repeat the base class.
    for (std::size_t s = 0; s < v.segments.size(); ++s) {
      CHECK(v.segments[s].start % 10 == 0);
      CHECK(v.segments[s].end == v.segments[s].start + 10);
    }
    for (std::size_t s = 0; s + 1 < v.segments.size(); ++s)
      for (std::size_t r = s + 1; r < v.segments.size(); ++r)
        if (v.segments[s].start == v.segments[r].start)
          CHECK(v.segments[s].action_class != v.segments[r].action_class);
  }
  CHECK(saw_overlay);
  CHECK(saw_plain);
}
