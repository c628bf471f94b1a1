#include "jadce/scenario.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "jadce/container.hpp"
#include "jadce/errors.hpp"
#include "jadce/rng.hpp"

namespace jadce::scen {

void ScenarioConfig::validate() const {
    if (n < 1 || l < 1 || m < 1) {
        throw ConfigError("scenario: N, L, M must all be >= 1");
    }
    if (l >= n) {
        throw ConfigError("scenario: pilot length L must be smaller than device count N");
    }
    if (!(p > 0.0 && p < 1.0)) {
        throw ConfigError("scenario: activity probability must lie in (0, 1)");
    }
}

lift::ComplexMat gen_pilot(int n, int l, std::uint64_t seed) {
    Rng rng(seed);
    lift::ComplexMat s(l, n);
    const double comp_std = std::sqrt(0.5);  // complex variance 1
    for (std::int64_t i = 0; i < s.re.size(); ++i) {
        s.re[i] = rng.normal(comp_std);
        s.im[i] = rng.normal(comp_std);
    }
    return s;
}

double noise_variance(const ScenarioConfig& config) {
    if (!config.snr_db.has_value()) {
        return 0.0;
    }
    return static_cast<double>(config.n) * config.p *
           std::pow(10.0, -*config.snr_db / 10.0);
}

std::uint64_t sample_seed(std::uint64_t dataset_seed, std::uint64_t index) {
    return Rng::derive(dataset_seed, index);
}

std::uint64_t pilot_seed(std::uint64_t dataset_seed) {
    // Separate stream tag keeps the pilot independent of every sample stream.
    return Rng::derive(dataset_seed ^ 0x70696c6f74ull, 0x9e3779b97f4a7c15ull);
}

Sample gen_sample(const ScenarioConfig& config, const lift::ComplexMat& pilot,
                  std::uint64_t seed) {
    if (pilot.rows != config.l || pilot.cols != config.n) {
        throw DimensionError("gen_sample: pilot shape does not match the scenario config");
    }
    Rng rng(seed);
    Sample s;
    s.activity.resize(static_cast<std::size_t>(config.n));
    for (int i = 0; i < config.n; ++i) {
        s.activity[static_cast<std::size_t>(i)] = rng.bernoulli(config.p) ? 1 : 0;
    }
    const double comp_std = std::sqrt(0.5);
    s.h = lift::ComplexMat(config.n, config.m);
    for (std::int64_t i = 0; i < s.h.re.size(); ++i) {
        s.h.re[i] = rng.normal(comp_std);
        s.h.im[i] = rng.normal(comp_std);
    }
    s.x = lift::ComplexMat(config.n, config.m);
    for (int i = 0; i < config.n; ++i) {
        if (!s.activity[static_cast<std::size_t>(i)]) continue;
        for (int j = 0; j < config.m; ++j) {
            s.x.re.at(i, j) = s.h.re.at(i, j);
            s.x.im.at(i, j) = s.h.im.at(i, j);
        }
    }
    s.y = lift::cmul(pilot, s.x);
    s.noise_var = noise_variance(config);
    if (s.noise_var > 0.0) {
        const double noise_std = std::sqrt(s.noise_var / 2.0);
        for (std::int64_t i = 0; i < s.y.re.size(); ++i) {
            s.y.re[i] += rng.normal(noise_std);
            s.y.im[i] += rng.normal(noise_std);
        }
    }
    return s;
}

Dataset make_dataset(const ScenarioConfig& config, int count) {
    return make_dataset(config, gen_pilot(config.n, config.l, pilot_seed(config.seed)), count);
}

Dataset make_dataset(const ScenarioConfig& config, const lift::ComplexMat& pilot, int count) {
    config.validate();
    if (count < 0) {
        throw ContractError("make_dataset: negative sample count");
    }
    Dataset ds;
    ds.config = config;
    ds.pilot = pilot;
    ds.samples.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        ds.samples.push_back(
            gen_sample(config, pilot, sample_seed(config.seed, static_cast<std::uint64_t>(i))));
    }
    return ds;
}

namespace {

nlohmann::json config_to_json(const ScenarioConfig& c) {
    nlohmann::json j;
    j["n"] = c.n;
    j["l"] = c.l;
    j["m"] = c.m;
    j["p"] = c.p;
    if (c.snr_db.has_value()) {
        j["snr_db"] = *c.snr_db;
    } else {
        j["snr_db"] = "noiseless";
    }
    j["seed"] = c.seed;
    return j;
}

ScenarioConfig config_from_json(const nlohmann::json& j) {
    ScenarioConfig c;
    c.n = j.at("n").get<int>();
    c.l = j.at("l").get<int>();
    c.m = j.at("m").get<int>();
    c.p = j.at("p").get<double>();
    if (j.at("snr_db").is_string()) {
        if (j.at("snr_db").get<std::string>() != "noiseless") {
            throw FormatError("dataset: snr_db must be a number or \"noiseless\"");
        }
        c.snr_db.reset();
    } else {
        c.snr_db = j.at("snr_db").get<double>();
    }
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
    io::Container c;
    c.kind = "dataset";
    c.meta()["config"] = config_to_json(ds.config);
    const int count = static_cast<int>(ds.samples.size());
    c.meta()["sample_count"] = count;
    c.add("pilot.re", ds.pilot.re);
    c.add("pilot.im", ds.pilot.im);
    if (count > 0) {
        const int n = ds.config.n, m = ds.config.m, l = ds.config.l;
        num::Tensor activity({count, n});
        num::Tensor hre({count, n, m}), him({count, n, m});
        num::Tensor xre({count, n, m}), xim({count, n, m});
        num::Tensor yre({count, l, m}), yim({count, l, m});
        num::Tensor nv({count});
        for (int i = 0; i < count; ++i) {
            const Sample& s = ds.samples[static_cast<std::size_t>(i)];
            for (int d = 0; d < n; ++d) {
                activity.at(i, d) = s.activity[static_cast<std::size_t>(d)] ? 1.0 : 0.0;
            }
            for (int r = 0; r < n; ++r) {
                for (int cc = 0; cc < m; ++cc) {
                    hre.at(i, r, cc) = s.h.re.at(r, cc);
                    him.at(i, r, cc) = s.h.im.at(r, cc);
                    xre.at(i, r, cc) = s.x.re.at(r, cc);
                    xim.at(i, r, cc) = s.x.im.at(r, cc);
                }
            }
            for (int r = 0; r < l; ++r) {
                for (int cc = 0; cc < m; ++cc) {
                    yre.at(i, r, cc) = s.y.re.at(r, cc);
                    yim.at(i, r, cc) = s.y.im.at(r, cc);
                }
            }
            nv[i] = s.noise_var;
        }
        c.add("activity", std::move(activity));
        c.add("h.re", std::move(hre));
        c.add("h.im", std::move(him));
        c.add("x.re", std::move(xre));
        c.add("x.im", std::move(xim));
        c.add("y.re", std::move(yre));
        c.add("y.im", std::move(yim));
        c.add("noise_var", std::move(nv));
    }
    c.save(path);
}

Dataset load_dataset(const std::string& path) {
    io::Container c = io::Container::load(path);
    if (c.kind != "dataset") {
        throw FormatError("expected a dataset container, found kind '" + c.kind + "' in " +
                          path);
    }
    Dataset ds;
    ds.config = config_from_json(c.meta().at("config"));
    ds.config.validate();
    const int count = c.meta().at("sample_count").get<int>();
    const int n = ds.config.n, m = ds.config.m, l = ds.config.l;
    ds.pilot = lift::ComplexMat(c.get("pilot.re"), c.get("pilot.im"));
    if (ds.pilot.rows != l || ds.pilot.cols != n) {
        throw FormatError("dataset pilot shape does not match its config in " + path);
    }
    if (count == 0) {
        return ds;
    }
    const num::Tensor& activity = c.get("activity");
    const num::Tensor& hre = c.get("h.re");
    const num::Tensor& him = c.get("h.im");
    const num::Tensor& xre = c.get("x.re");
    const num::Tensor& xim = c.get("x.im");
    const num::Tensor& yre = c.get("y.re");
    const num::Tensor& yim = c.get("y.im");
    const num::Tensor& nv = c.get("noise_var");
    if (activity.shape() != std::vector<int>{count, n} ||
        hre.shape() != std::vector<int>{count, n, m} || !hre.same_shape(him) ||
        !hre.same_shape(xre) || !hre.same_shape(xim) ||
        yre.shape() != std::vector<int>{count, l, m} || !yre.same_shape(yim) ||
        nv.shape() != std::vector<int>{count}) {
        throw FormatError("dataset array shapes inconsistent with config in " + path);
    }
    ds.samples.resize(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        Sample& s = ds.samples[static_cast<std::size_t>(i)];
        s.activity.resize(static_cast<std::size_t>(n));
        for (int d = 0; d < n; ++d) {
            s.activity[static_cast<std::size_t>(d)] = activity.at(i, d) != 0.0 ? 1 : 0;
        }
        s.h = lift::ComplexMat(n, m);
        s.x = lift::ComplexMat(n, m);
        s.y = lift::ComplexMat(l, m);
        for (int r = 0; r < n; ++r) {
            for (int cc = 0; cc < m; ++cc) {
                s.h.re.at(r, cc) = hre.at(i, r, cc);
                s.h.im.at(r, cc) = him.at(i, r, cc);
                s.x.re.at(r, cc) = xre.at(i, r, cc);
                s.x.im.at(r, cc) = xim.at(i, r, cc);
            }
        }
        for (int r = 0; r < l; ++r) {
            for (int cc = 0; cc < m; ++cc) {
                s.y.re.at(r, cc) = yre.at(i, r, cc);
                s.y.im.at(r, cc) = yim.at(i, r, cc);
            }
        }
        s.noise_var = nv[i];
    }
    return ds;
}

std::vector<LiftedSample> lift_samples(const Dataset& ds) {
    std::vector<LiftedSample> out;
    out.reserve(ds.samples.size());
    for (const Sample& s : ds.samples) {
        out.push_back(LiftedSample{lift::lift_stack(s.y).mat, lift::lift_stack(s.x).mat});
    }
    return out;
}

bool dataset_equal(const Dataset& a, const Dataset& b) {
    auto mats_equal = [](const lift::ComplexMat& x, const lift::ComplexMat& y) {
        return x.rows == y.rows && x.cols == y.cols && x.re.raw() == y.re.raw() &&
               x.im.raw() == y.im.raw();
    };
    if (a.config.n != b.config.n || a.config.l != b.config.l || a.config.m != b.config.m ||
        a.config.p != b.config.p || a.config.seed != b.config.seed ||
        a.config.snr_db != b.config.snr_db) {
        return false;
    }
    if (!mats_equal(a.pilot, b.pilot) || a.samples.size() != b.samples.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        const Sample& sa = a.samples[i];
        const Sample& sb = b.samples[i];
        if (sa.activity != sb.activity || sa.noise_var != sb.noise_var ||
            !mats_equal(sa.h, sb.h) || !mats_equal(sa.x, sb.x) || !mats_equal(sa.y, sb.y)) {
            return false;
        }
    }
    return true;
}

}  // namespace jadce::scen
