#include "doctest.h"
#include "opca/config.hpp"
#include "opca/errors.hpp"

using namespace opca;

TEST_CASE("defaults follow the training recipe") {
  const ExperimentConfig c;
  CHECK(c.batch_size == 16);
  CHECK(c.learning_rate == 5e-4);
  CHECK(c.traverse_min == -2.0);
  CHECK(c.traverse_max == 2.0);
  CHECK(c.traverse_steps == 9);
  CHECK(c.update_before_forward);
  CHECK(c.backward_mode == BackwardMode::projector);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("parse handles comments, blanks and whitespace") {
  const auto c = parse_config(
      "# comment\n"
      "\n"
      "  epochs = 3  \n"
      "mode=multi_patch\r\n"
      "latent_channels=4\nlatent_height=2\nlatent_width=2\nnum_components=3\n"
      "gamma=0.5\n"
      "fractions=0.25, 1\n"
      "eval_k=1,2,3\n"
      "shape=rectangle\n"
      "update_before_forward=false\n"
      "eta_schedule=inverse_time\n");
  CHECK(c.epochs == 3);
  CHECK(c.mode == LayoutMode::multi_patch);
  CHECK(c.gamma == 0.5);
  CHECK(c.fractions == std::vector<double>{0.25, 1.0});
  CHECK(c.eval_k == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(c.shape == ToyShape::rectangle);
  CHECK_FALSE(c.update_before_forward);
  CHECK(c.eta_schedule == LearningRateSchedule::Kind::inverse_time);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("unknown keys and bad values are config errors") {
  CHECK_THROWS_AS(parse_config("no_such_key=1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("epochs\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("epochs=-1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("epochs=1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("gamma=abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("gamma=0.5x\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("mode=grid\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("update_before_forward=yes\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/opca.cfg"), ConfigError);
  try {
    parse_config("epochs=1\n\nbogus=2\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("validate rejects out-of-range settings") {
  auto invalid = [](const char* text) { CHECK_THROWS_AS(parse_config(text).validate(), ConfigError); };
  invalid("batch_size=0\n");
  invalid("gamma=1\n");
  invalid("gamma=0\n");
  invalid("learning_rate=0\n");
  invalid("num_components=17\n");
  invalid("mode=multi_patch\nlatent_channels=4\nlatent_height=2\nlatent_width=2\nnum_components=5\n");
  invalid("dataset=pgm_dir\n");
  invalid("fractions=0\n");
  invalid("fractions=1.5\n");
  invalid("traverse_min=1\ntraverse_max=0\n");
  invalid("image_size=4\n");
}

TEST_CASE("to_text round-trips every key") {
  ExperimentConfig c;
  c.epochs = 7;
  c.learning_rate = 0.1 + 0.2;  // not exactly representable in short form
  c.mode = LayoutMode::multi_patch;
  c.fractions = {1.0 / 3.0, 1.0};
  c.eval_k = {1, 5};
  c.data_dir = "some/dir";
  c.backward_mode = BackwardMode::straight_through;
  const std::string text = to_text(c);
  CHECK(parse_config(text) == c);
  CHECK(to_text(parse_config(text)) == text);
  for (const auto& key : config_keys()) CHECK(text.find(key + "=") != std::string::npos);
}

TEST_CASE("derived settings") {
  const auto c = parse_config("eta0=0.05\neta_decay=0.1\neps_ortho=1e-9\northo_period=4\nseed=12\n");
  const BottleneckConfig b = c.bottleneck_config();
  CHECK(b.oja.schedule.eta0 == 0.05);
  CHECK(b.oja.schedule.decay == 0.1);
  CHECK(b.oja.eps_ortho == 1e-9);
  CHECK(b.oja.ortho_period == 4);
  CHECK(b.seed == 12);
  CHECK(c.checkpoint_path() == std::filesystem::path("out") / "checkpoint.opca");
  CHECK(parse_config("checkpoint=x.opca\n").checkpoint_path() == std::filesystem::path("x.opca"));
}
