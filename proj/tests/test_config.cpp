#include <gtest/gtest.h>

#include <string>

#include "qlshock/config.hpp"

using namespace qlshock;
using namespace qlshock::config;

namespace {

const std::string kMinimal = R"(
[model]
g2 = 1.0
delta = 0.05
[seed]
profile = bump
strength = threshold
)";

std::string message_of(const std::string& text) {
  try {
    parse_ini_string(text).validate_physics();
  } catch (const ConfigInvalid& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, MinimalResolvesDefaults) {
  const auto c = parse_ini_string(kMinimal);
  EXPECT_NO_THROW(c.validate_physics());
  EXPECT_EQ(c.model.g2, 1.0);
  EXPECT_EQ(c.model.delta, 0.05);
  EXPECT_EQ(c.model.r0, 2.0);
  ASSERT_TRUE(c.seed.strength.has_value());
  EXPECT_DOUBLE_EQ(*c.seed.strength, -1.0 / 6.0);
  EXPECT_FALSE(c.seed.amplitude.has_value());
  EXPECT_EQ(c.scheme, Scheme::optical);
  EXPECT_EQ(c.points_per_pulse, 128u);
  EXPECT_EQ(c.optical_dissipation, 0.1);
  EXPECT_EQ(c.tol.cross_rel_max, 0.02);
  EXPECT_FALSE(c.burgers.has_value());
}

TEST(Config, FullFileParses) {
  const auto c = parse_ini_string(kMinimal + R"(
[grid]
points_per_pulse = 64
taper_width = 1.5
[solver]
scheme = eulerian
window = comoving
t_end = -1.5
[fan]
n_chars = 33
probe_times = -1.8, -1.6
[sweep]
deltas = 0.1, 0.05, 0.025
jobs = 2
[output]
dir = somewhere
write_probes = false
[tolerances]
mech_constant = 0.9
)");
  EXPECT_EQ(c.points_per_pulse, 64u);
  EXPECT_EQ(c.taper_width, 1.5);
  EXPECT_EQ(c.scheme, Scheme::eulerian);
  EXPECT_TRUE(c.comoving);
  EXPECT_EQ(c.n_chars, 33u);
  EXPECT_EQ(c.probe_times, (std::vector<double>{-1.8, -1.6}));
  EXPECT_EQ(c.deltas.size(), 3u);
  EXPECT_EQ(c.jobs, 2u);
  EXPECT_EQ(c.out_dir, "somewhere");
  EXPECT_FALSE(c.write_probes);
  EXPECT_EQ(c.tol.mech_constant, 0.9);
  EXPECT_NO_THROW(c.validate_physics());
  EXPECT_NO_THROW(c.validate_sweep());
}

TEST(Config, UnknownKeyOrSectionRejected) {
  EXPECT_THROW(parse_ini_string(kMinimal + "[grid]\npoints = 64\n"), ConfigInvalid);
  EXPECT_THROW(parse_ini_string(kMinimal + "[extras]\nx = 1\n"), ConfigInvalid);
  EXPECT_THROW(parse_ini_string("loose = 1\n" + kMinimal), ConfigInvalid);
}

TEST(Config, RequiredFieldsNamed) {
  EXPECT_NE(message_of("[model]\ndelta = 0.05\n[seed]\nprofile = zero\n").find("model.g2"), std::string::npos);
  EXPECT_NE(message_of("[model]\ng2 = 1\n[seed]\nprofile = zero\n").find("model.delta"), std::string::npos);
  EXPECT_NE(message_of("[model]\ng2 = 1\ndelta = 0.05\n").find("seed.profile"), std::string::npos);
  EXPECT_NE(message_of("[seed]\nprofile = zero\n").find("[model]"), std::string::npos);
  EXPECT_NE(message_of("[model]\ng2 = 1\ndelta = 0.05\n[seed]\nprofile = bump\n").find("amplitude"),
            std::string::npos);
}

TEST(Config, BadValuesRejected) {
  EXPECT_THROW(parse_ini_string("[model]\ng2 = one\ndelta = 0.05\n"), ConfigInvalid);
  EXPECT_THROW(parse_ini_string("[model]\ng2 = 1.0x\ndelta = 0.05\n"), ConfigInvalid);
  EXPECT_THROW(parse_ini_string("[model]\ng2 = nan\ndelta = 0.05\n"), ConfigInvalid);
  EXPECT_THROW(parse_ini_string(kMinimal + "[grid]\npoints_per_pulse = -4\n"), ConfigInvalid);
  EXPECT_THROW(parse_ini_string(kMinimal + "[output]\nwrite_probes = maybe\n"), ConfigInvalid);
  EXPECT_THROW(parse_ini_string(kMinimal + "[solver]\nscheme = spectral\n"), ConfigInvalid);
  EXPECT_THROW(parse_ini_string(kMinimal + "[fan]\nprobe_times = -1.5,,-1\n"), ConfigInvalid);
  EXPECT_THROW(parse_ini_string("[model\n"), ConfigInvalid);
}

TEST(Config, PhysicsValidation) {
  EXPECT_THROW(parse_ini_string(kMinimal + "[grid]\npoints_per_pulse = 16\n").validate_physics(), ConfigInvalid);
  EXPECT_THROW(parse_ini_string(kMinimal + "[solver]\nt_end = -2.5\n").validate_physics(), ConfigInvalid);
  EXPECT_THROW(parse_ini_string(kMinimal + "[fan]\nn_chars = 2\n").validate_physics(), ConfigInvalid);
  EXPECT_THROW(parse_ini_string(kMinimal + "[fan]\nn_chars = 10\n").validate_physics(), ConfigInvalid);
  EXPECT_THROW(parse_ini_string(kMinimal + "[fan]\nprobe_times = -1, -1.5\n").validate_physics(), ConfigInvalid);
  EXPECT_THROW(parse_ini_string(kMinimal + "[seed]\namplitude = 1\n"), ConfigInvalid);  // duplicate section
  const auto both = "[model]\ng2 = 1\ndelta = 0.05\n[seed]\nprofile = bump\namplitude = 1\nstrength = -0.2\n";
  EXPECT_THROW(parse_ini_string(both).validate_physics(), ConfigInvalid);
  const auto linear = "[model]\ng2 = 0\ndelta = 0.05\n[seed]\nprofile = bump\nstrength = threshold\n";
  EXPECT_THROW(parse_ini_string(linear).validate_physics(), ConfigInvalid);
}

TEST(Config, SweepValidation) {
  EXPECT_THROW(parse_ini_string(kMinimal).validate_sweep(), ConfigInvalid);
  EXPECT_THROW(parse_ini_string(kMinimal + "[sweep]\ndeltas = 0.1, 0.05\n").validate_sweep(), ConfigInvalid);
  EXPECT_THROW(parse_ini_string(kMinimal + "[sweep]\ndeltas = 0.1, 0.05, 0\n").validate_sweep(), ConfigInvalid);
}

TEST(Config, BurgersSection) {
  const auto c = parse_ini_string("[burgers]\nprofile = linear\nx_min = -1\nx_max = 1\nt_end = 0.99\n");
  ASSERT_TRUE(c.burgers.has_value());
  EXPECT_EQ(c.burgers->profile, "linear");
  EXPECT_EQ(c.burgers->x_min, -1.0);
  EXPECT_FALSE(c.has_model);
  EXPECT_THROW(parse_ini_string("[burgers]\nt_end = 1\n"), ConfigInvalid);
  EXPECT_THROW(parse_ini_string("[burgers]\nprofile = cubic\n"), ConfigInvalid);
  EXPECT_THROW(parse_ini_string("[burgers]\nprofile = sin\nx_max = -1\n"), ConfigInvalid);
  EXPECT_THROW(parse_ini_string("[burgers]\nprofile = sin\nt_end = 0\n"), ConfigInvalid);
}
