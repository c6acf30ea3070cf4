#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "vmr/dataset.hpp"
#include "vmr/random.hpp"

namespace vmr::harness {

namespace {

using Plane = std::vector<double>;

struct Blob {
  double cy, cx, sigma, amplitude;
};

void add_blob(Plane& plane, std::size_t S, const Blob& b) {
  const double inv = 1.0 / (2.0 * b.sigma * b.sigma);
  const double reach = 4.0 * b.sigma;
  const auto lo = [&](double c) { return static_cast<std::size_t>(std::max(0.0, std::floor(c - reach))); };
  const auto hi = [&](double c) {
    return static_cast<std::size_t>(std::min(static_cast<double>(S - 1), std::ceil(c + reach)));
  };
  for (std::size_t h = lo(b.cy); h <= hi(b.cy); ++h)
    for (std::size_t w = lo(b.cx); w <= hi(b.cx); ++w) {
      const double dy = static_cast<double>(h) - b.cy, dx = static_cast<double>(w) - b.cx;
      plane[h * S + w] += b.amplitude * std::exp(-(dy * dy + dx * dx) * inv);
    }
}

Plane mirrored(const Plane& p, std::size_t S) {
  Plane out(p.size());
  for (std::size_t h = 0; h < S; ++h)
    for (std::size_t w = 0; w < S; ++w) out[h * S + w] = p[h * S + (S - 1 - w)];
  return out;
}

Tensor to_image(const Plane& p, std::size_t S) {
  std::vector<double> v(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    v[i] = static_cast<double>(static_cast<float>(std::clamp(p[i], 0.0, 1.0)));
  return Tensor({1, S, S}, std::move(v));
}

Subject make_subject(const SyntheticConfig& cfg, std::size_t index, bool positive) {
  Rng rng(derive_seed(cfg.seed, index + 1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t S = cfg.image_size, K = cfg.timesteps;
  const double Sd = static_cast<double>(S);

  Subject s;
  char id[32];
  std::snprintf(id, sizeof id, "S%04zu", index);
  s.id = id;

  std::discrete_distribution<int> level_dist(cfg.density_weights.begin(), cfg.density_weights.end());
  const int level = level_dist(rng);
  const double amp = cfg.density_amplitude[static_cast<std::size_t>(level)] * (0.85 + 0.3 * unit(rng));
  const double base = 0.15 + amp;

  // One texture per projection (CC, MLO), shared by both sides.
  std::array<Plane, 2> texture;
  double texture_mass = 0.0;
  for (auto& tex : texture) {
    tex.assign(S * S, base);
    for (int b = 0; b < 40; ++b) {
      const Blob blob{unit(rng) * Sd, unit(rng) * Sd, 1.5 + 3.5 * unit(rng), amp * (0.3 + 0.7 * unit(rng))};
      add_blob(tex, S, blob);
    }
    for (double v : tex) texture_mass += v - base;
  }
  s.dense_area = 100.0 * texture_mass / static_cast<double>(2 * S * S);

  if (positive) {
    s.label.event_year = 1 + static_cast<int>(rng() % K);
    s.label.followup_years = static_cast<int>(K);
  } else {
    s.label.followup_years = unit(rng) < cfg.censoring_probability ? 1 + static_cast<int>(rng() % (K - 1))
                                                                   : static_cast<int>(K);
  }
  const bool right_lesion = rng() & 1u;
  const double margin = Sd / 8.0;
  const double lesion_y = margin + unit(rng) * (Sd - 2 * margin);
  const double lesion_x = margin + unit(rng) * (Sd - 2 * margin);

  const double age0 = 40.0 + 30.0 * unit(rng);
  double age = age0;
  std::normal_distribution<double> noise(0.0, cfg.noise_std);
  for (std::size_t t = 0; t < K; ++t) {
    Exam e;
    e.delta_t_years = t == 0 ? 0.0 : 0.9 + 0.2 * unit(rng);
    age += e.delta_t_years;
    e.age_years = age;
    e.present = t + 1 == K || unit(rng) >= cfg.missing_exam_probability;
    const bool lesion_on = positive && static_cast<int>(t) >= *s.label.event_year - 1;
    const double sigma =
        lesion_on ? cfg.lesion_base_sigma + cfg.lesion_growth_per_year * static_cast<double>(t + 1 - *s.label.event_year)
                  : 0.0;
    // Benign findings come and go between exams at random positions.
    const bool benign = unit(rng) < cfg.benign_probability;
    const bool benign_right = rng() & 1u;
    const Blob benign_blob{margin + unit(rng) * (Sd - 2 * margin), margin + unit(rng) * (Sd - 2 * margin),
                           cfg.lesion_base_sigma + 2.0 * cfg.lesion_growth_per_year * unit(rng),
                           cfg.lesion_contrast * (0.5 + 0.5 * unit(rng))};
    for (std::size_t proj = 0; proj < 2; ++proj) {
      Plane left = texture[proj];
      Plane right = mirrored(texture[proj], S);
      if (lesion_on) add_blob(right_lesion ? right : left, S, {lesion_y, lesion_x, sigma, cfg.lesion_contrast});
      if (benign) add_blob(benign_right ? right : left, S, benign_blob);
      for (auto* plane : {&left, &right})
        for (double& v : *plane) v += noise(rng);
      if (e.present) {
        e.views[2 * proj] = to_image(left, S);
        e.views[2 * proj + 1] = to_image(right, S);
      }
    }
    s.exams.push_back(std::move(e));
  }
  return s;
}

}  // namespace

Dataset gen_synthetic(const SyntheticConfig& config) {
  config.validate();
  const std::size_t n = config.n_subjects;
  const auto n_pos = static_cast<std::size_t>(std::llround(config.positive_fraction * static_cast<double>(n)));
  std::vector<char> positive(n, 0);
  std::fill(positive.begin(), positive.begin() + static_cast<std::ptrdiff_t>(n_pos), 1);
  Rng shuffle_rng(derive_seed(config.seed, 0));
  std::shuffle(positive.begin(), positive.end(), shuffle_rng);

  Dataset data;
  data.image_size = config.image_size;
  data.subjects.resize(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) data.subjects[i] = make_subject(config, i, positive[i] != 0);
  return data;
}

}  // namespace vmr::harness
