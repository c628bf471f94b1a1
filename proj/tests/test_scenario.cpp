#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "helpers.hpp"
#include "jadce/container.hpp"
#include "jadce/errors.hpp"
#include "jadce/scenario.hpp"

using namespace jadce;
using namespace jadce::scen;
using jadce::num::Tensor;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/jadce_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_SUITE_BEGIN("scenario");

TEST_CASE("config validation") {
    ScenarioConfig c;
    c.n = 8;
    c.l = 8;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.l = 4;
    c.p = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.p = 0.1;
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("pilot generation is deterministic per seed") {
    auto a = gen_pilot(16, 8, 42);
    auto b = gen_pilot(16, 8, 42);
    auto c = gen_pilot(16, 8, 43);
    CHECK(a.re.raw() == b.re.raw());
    CHECK(a.im.raw() == b.im.raw());
    CHECK(a.re.raw() != c.re.raw());
}

TEST_CASE("pilot moments: unit complex variance, zero mean") {
    // 10^5 entries via one wide pilot draw.
    auto s = gen_pilot(500, 100, 7);
    const std::int64_t count = s.re.size();
    REQUIRE(count == 50000);
    double mean_re = 0.0, mean_im = 0.0, var = 0.0;
    for (std::int64_t i = 0; i < count; ++i) {
        mean_re += s.re[i];
        mean_im += s.im[i];
        var += s.re[i] * s.re[i] + s.im[i] * s.im[i];
    }
    mean_re /= static_cast<double>(count);
    mean_im /= static_cast<double>(count);
    var /= static_cast<double>(count);
    CHECK(std::fabs(mean_re) < 0.02);
    CHECK(std::fabs(mean_im) < 0.02);
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("group sparsity: nonzero rows of X match the activity support exactly") {
    ScenarioConfig c;
    c.n = 32;
    c.l = 8;
    c.m = 4;
    c.p = 0.3;
    c.snr_db = 10.0;
    c.seed = 11;
    auto pilot = gen_pilot(c.n, c.l, pilot_seed(c.seed));
    for (int i = 0; i < 20; ++i) {
        Sample s = gen_sample(c, pilot, sample_seed(c.seed, static_cast<std::uint64_t>(i)));
        for (int d = 0; d < c.n; ++d) {
            double row_norm = 0.0;
            for (int j = 0; j < c.m; ++j) {
                row_norm += s.x.re.at(d, j) * s.x.re.at(d, j) +
                            s.x.im.at(d, j) * s.x.im.at(d, j);
            }
            if (s.activity[static_cast<std::size_t>(d)]) {
                CHECK(row_norm > 0.0);
            } else {
                CHECK(row_norm == 0.0);
            }
        }
    }
}

TEST_CASE("noiseless mode: Y equals S X exactly") {
    ScenarioConfig c;
    c.n = 16;
    c.l = 8;
    c.m = 2;
    c.p = 0.2;
    c.seed = 3;
    auto pilot = gen_pilot(c.n, c.l, pilot_seed(c.seed));
    Sample s = gen_sample(c, pilot, sample_seed(c.seed, 0));
    auto sx = lift::cmul(pilot, s.x);
    CHECK(num::frobenius(num::sub(s.y.re, sx.re)) == 0.0);
    CHECK(num::frobenius(num::sub(s.y.im, sx.im)) == 0.0);
    CHECK(s.noise_var == 0.0);
}

TEST_CASE("all-zero activity draw leaves X empty and Y pure noise") {
    ScenarioConfig c;
    c.n = 6;
    c.l = 3;
    c.m = 2;
    c.p = 0.05;
    c.snr_db = 20.0;
    auto pilot = gen_pilot(c.n, c.l, 5);
    // Deterministically hunt a seed whose draw has no active device.
    bool found = false;
    for (std::uint64_t seed = 0; seed < 200 && !found; ++seed) {
        Sample s = gen_sample(c, pilot, seed);
        bool any = false;
        for (auto a : s.activity) any |= (a != 0);
        if (any) continue;
        found = true;
        CHECK(num::frobenius(s.x.re) == 0.0);
        CHECK(num::frobenius(s.x.im) == 0.0);
        // X = 0 makes Y = Z; the noise must actually be there.
        CHECK(num::frobenius(s.y.re) > 0.0);
    }
    CHECK(found);
}

TEST_CASE("empirical activity rate matches p") {
    ScenarioConfig c;
    c.n = 32;
    c.l = 8;
    c.m = 1;
    c.p = 0.1;
    c.seed = 17;
    auto pilot = gen_pilot(c.n, c.l, pilot_seed(c.seed));
    std::int64_t active = 0, total = 0;
    for (int i = 0; i < 10000; ++i) {
        Sample s = gen_sample(c, pilot, sample_seed(c.seed, static_cast<std::uint64_t>(i)));
        for (auto a : s.activity) {
            active += a;
            ++total;
        }
    }
    const double rate = static_cast<double>(active) / static_cast<double>(total);
    CHECK(rate == doctest::Approx(0.1).epsilon(0.1));  // 0.1 +- 0.01
}

TEST_CASE("measured SNR averages to the configured value") {
    ScenarioConfig c;
    c.n = 200;
    c.l = 20;
    c.m = 4;
    c.p = 0.2;
    c.snr_db = 10.0;
    c.seed = 23;
    auto pilot = gen_pilot(c.n, c.l, pilot_seed(c.seed));
    double mean_db = 0.0;
    int used = 0;
    for (int i = 0; i < 200; ++i) {
        Sample s = gen_sample(c, pilot, sample_seed(c.seed, static_cast<std::uint64_t>(i)));
        auto sx = lift::cmul(pilot, s.x);
        const double sig = num::sum_squares(sx.re) + num::sum_squares(sx.im);
        auto z = lift::csub(s.y, sx);
        const double noise = num::sum_squares(z.re) + num::sum_squares(z.im);
        if (sig == 0.0) continue;  // degenerate all-zero draw
        mean_db += 10.0 * std::log10(sig / noise);
        ++used;
    }
    mean_db /= used;
    CHECK(used > 190);
    CHECK(std::fabs(mean_db - 10.0) < 0.5);
}

TEST_CASE("dataset determinism: same config and seed give equal datasets") {
    ScenarioConfig c;
    c.n = 16;
    c.l = 8;
    c.m = 2;
    c.p = 0.2;
    c.snr_db = 15.0;
    c.seed = 31;
    CHECK(dataset_equal(make_dataset(c, 5), make_dataset(c, 5)));
}

TEST_CASE("dataset save/load round trip is bit exact") {
    ScenarioConfig c;
    c.n = 12;
    c.l = 6;
    c.m = 3;
    c.p = 0.25;
    c.snr_db = 5.0;
    c.seed = 37;
    Dataset ds = make_dataset(c, 4);
    TempFile f("roundtrip.bin");
    save_dataset(ds, f.path);
    Dataset back = load_dataset(f.path);
    CHECK(dataset_equal(ds, back));
}

TEST_CASE("empty dataset round trips") {
    ScenarioConfig c;
    c.n = 12;
    c.l = 6;
    c.m = 3;
    c.p = 0.25;
    c.seed = 41;
    Dataset ds = make_dataset(c, 0);
    TempFile f("empty.bin");
    save_dataset(ds, f.path);
    Dataset back = load_dataset(f.path);
    CHECK(dataset_equal(ds, back));
    CHECK(back.samples.empty());
}

TEST_CASE("truncated file reports a format error, not a crash") {
    ScenarioConfig c;
    c.n = 12;
    c.l = 6;
    c.m = 3;
    c.p = 0.25;
    c.seed = 43;
    Dataset ds = make_dataset(c, 3);
    TempFile f("truncated.bin");
    save_dataset(ds, f.path);
    // Chop the payload tail off.
    std::ifstream in(f.path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    std::ofstream out(f.path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() * 2 / 3));
    out.close();
    CHECK_THROWS_AS(load_dataset(f.path), FormatError);
}

TEST_CASE("version mismatch is its own error") {
    ScenarioConfig c;
    c.n = 12;
    c.l = 6;
    c.m = 3;
    c.p = 0.25;
    c.seed = 47;
    Dataset ds = make_dataset(c, 1);
    TempFile f("version.bin");
    save_dataset(ds, f.path);
    std::ifstream in(f.path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const auto pos = bytes.find("\"version\":1");
    REQUIRE(pos != std::string::npos);
    bytes[pos + std::string("\"version\":").size()] = '9';
    std::ofstream out(f.path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    CHECK_THROWS_AS(load_dataset(f.path), VersionError);
}

TEST_CASE("missing file is an io error") {
    CHECK_THROWS_AS(load_dataset("/tmp/jadce_does_not_exist.bin"), IoError);
}

TEST_SUITE_END();
