#include "tigh/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

#include "tigh/csv.hpp"
#include "tigh/errors.hpp"
#include "tigh/rng.hpp"
#include "tigh/tghio.hpp"

namespace tigh {

SynthSpec SynthSpec::from_run(const RunConfig& rc) {
  SynthSpec s;
  s.n_train = static_cast<int>(rc.integer("synth.n_train"));
  s.n_test = static_cast<int>(rc.integer("synth.n_test"));
  s.n_aux = static_cast<int>(rc.integer("synth.n_aux"));
  s.n_species = static_cast<int>(rc.integer("synth.n_species"));
  s.n_pa_species = static_cast<int>(rc.integer("synth.n_pa_species"));
  s.n_regions = static_cast<int>(rc.integer("synth.n_regions"));
  s.n_clusters = static_cast<int>(rc.integer("synth.n_clusters"));
  s.cluster_radius_km = rc.num("synth.cluster_radius_km");
  s.years = rc.int_list("synth.years");
  s.pool_size = static_cast<int>(rc.integer("synth.pool_size"));
  s.pool_extra_po = static_cast<int>(rc.integer("synth.pool_extra_po"));
  s.presence_prob = rc.num("synth.presence_prob");
  s.aux_presence_prob = rc.num("synth.aux_presence_prob");
  s.missing_rate = rc.num("synth.missing_rate");
  s.env_features = static_cast<int>(rc.integer("synth.env_features"));
  s.image_size = static_cast<int>(rc.integer("synth.image_size"));
  s.image_channels = static_cast<int>(rc.integer("synth.image_channels"));
  s.seed = static_cast<std::uint64_t>(rc.integer("seed"));
  s.validate();
  return s;
}

void SynthSpec::validate() const {
  if (n_train <= 0 || n_test <= 0 || n_aux < 0 || n_species <= 0 || n_regions <= 0 ||
      n_clusters <= 0 || env_features <= 0 || image_size <= 0 || image_channels <= 0)
    throw ConfigError("synthetic spec counts must be positive");
  if (n_pa_species <= 0 || n_pa_species > n_species)
    throw ConfigError("need 0 < n_pa_species <= n_species");
  if (pool_size <= 0 || pool_size > n_pa_species)
    throw ConfigError("species pool size must fit in the presence-absence id range");
  if (pool_extra_po < 0 || pool_extra_po > n_species - n_pa_species)
    throw ConfigError("pool_extra_po must fit in the presence-only id range");
  if (years.empty()) throw ConfigError("need at least one survey year");
  if (cluster_radius_km <= 0 || cluster_radius_km > 10.0)
    throw ConfigError("cluster radius must be in (0, 10] km so clusters form graph edges");
  if (presence_prob <= 0 || presence_prob > 1 || aux_presence_prob <= 0 || aux_presence_prob > 1)
    throw ConfigError("presence probabilities must be in (0, 1]");
  if (missing_rate < 0 || missing_rate >= 1) throw ConfigError("missing rate must be in [0, 1)");
}

namespace {

constexpr double kBaseLat = 43.0;
constexpr double kBaseLon = 5.0;
constexpr double kBoxDeg = 0.9;  // ~100 km, enough to keep clusters apart

struct Cluster {
  double lat = 0.0, lon = 0.0;
  int year = 0, region = 0;
  std::vector<int> pool_pa, pool_po;
};

struct Survey {
  long long id = 0;
  int cluster = 0;
  double lat = 0.0, lon = 0.0;
  std::vector<int> labels;
};

// Smooth pseudo-climate field: a fixed random mixture of low-frequency
// sinusoids over the survey box.
struct LatentField {
  double fa = 0, fb = 0, pa = 0, pb = 0, amp = 1;

  static LatentField draw(Rng& rng) {
    LatentField f;
    f.fa = 2.0 + 6.0 * rng.uniform();
    f.fb = 2.0 + 6.0 * rng.uniform();
    f.pa = 6.283185307179586 * rng.uniform();
    f.pb = 6.283185307179586 * rng.uniform();
    f.amp = 0.5 + rng.uniform();
    return f;
  }

  double at(double lat, double lon) const {
    double u = (lat - kBaseLat) / kBoxDeg, v = (lon - kBaseLon) / kBoxDeg;
    return amp * std::sin(fa * u + pa) * std::cos(fb * v + pb);
  }
};

std::vector<int> sample_distinct(Rng& rng, int lo, int hi, int k) {
  std::vector<int> ids(hi - lo);
  for (int i = 0; i < hi - lo; ++i) ids[i] = lo + i;
  for (int i = 0; i < k; ++i) {
    int j = i + rng.uniform_int(static_cast<int>(ids.size()) - i);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(k);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<int> draw_labels(Rng& rng, const std::vector<int>& pool, double p) {
  std::vector<int> out;
  for (int s : pool)
    if (rng.uniform() < p) out.push_back(s);
  return out;
}

Survey place_survey(Rng& rng, const Cluster& c, const SynthSpec& spec, long long id, int ci) {
  Survey s;
  s.id = id;
  s.cluster = ci;
  double dlat_km = rng.normal(0.0, spec.cluster_radius_km);
  double dlon_km = rng.normal(0.0, spec.cluster_radius_km);
  s.lat = c.lat + dlat_km / 111.0;
  s.lon = c.lon + dlon_km / (111.0 * std::cos(c.lat * 3.141592653589793 / 180.0));
  return s;
}

}  // namespace

void generate_synthetic(const SynthSpec& spec, const std::string& out_dir) {
  spec.validate();
  std::filesystem::create_directories(out_dir);
  auto path = [&](const std::string& name) { return out_dir + "/" + name; };

  Rng cluster_rng = substream(spec.seed, "data/synth/clusters");
  std::vector<Cluster> clusters(spec.n_clusters);
  for (int c = 0; c < spec.n_clusters; ++c) {
    clusters[c].lat = kBaseLat + kBoxDeg * cluster_rng.uniform();
    clusters[c].lon = kBaseLon + kBoxDeg * cluster_rng.uniform();
    clusters[c].year = spec.years[c % spec.years.size()];
    clusters[c].region = c % spec.n_regions;
    clusters[c].pool_pa = sample_distinct(cluster_rng, 0, spec.n_pa_species, spec.pool_size);
    clusters[c].pool_po = sample_distinct(cluster_rng, spec.n_pa_species, spec.n_species,
                                          spec.pool_extra_po);
  }

  Rng survey_rng = substream(spec.seed, "data/synth/surveys");
  Rng label_rng = substream(spec.seed, "data/synth/labels");
  std::vector<Survey> train, test, aux;
  for (int i = 0; i < spec.n_train; ++i) {
    int ci = i % spec.n_clusters;
    Survey s = place_survey(survey_rng, clusters[ci], spec, 1000 + i, ci);
    s.labels = draw_labels(label_rng, clusters[ci].pool_pa, spec.presence_prob);
    train.push_back(std::move(s));
  }
  for (int i = 0; i < spec.n_test; ++i) {
    int ci = i % spec.n_clusters;
    Survey s = place_survey(survey_rng, clusters[ci], spec, 2000 + i, ci);
    s.labels = draw_labels(label_rng, clusters[ci].pool_pa, spec.presence_prob);
    test.push_back(std::move(s));
  }
  for (int i = 0; i < spec.n_aux; ++i) {
    int ci = i % spec.n_clusters;
    Survey s = place_survey(survey_rng, clusters[ci], spec, 3000 + i, ci);
    std::vector<int> pool = clusters[ci].pool_pa;
    pool.insert(pool.end(), clusters[ci].pool_po.begin(), clusters[ci].pool_po.end());
    s.labels = draw_labels(label_rng, pool, spec.aux_presence_prob);
    aux.push_back(std::move(s));
  }

  // metadata.csv covers every survey; model inputs cover train + test only
  {
    std::string out = "survey_id,lat,lon,year,region,split\n";
    auto emit = [&](const std::vector<Survey>& list, const char* split) {
      for (const auto& s : list) {
        const Cluster& c = clusters[s.cluster];
        out += std::to_string(s.id) + "," + format_fixed(s.lat, 6) + "," +
               format_fixed(s.lon, 6) + "," + std::to_string(c.year) + ",R" +
               std::to_string(c.region) + "," + split + "\n";
      }
    };
    emit(train, "train");
    emit(test, "test");
    emit(aux, "aux");
    write_text_file(path("metadata.csv"), out);
  }
  {
    std::string out = "survey_id,species_id\n";
    for (const auto* list : {&train, &aux})
      for (const auto& s : *list)
        for (int sp : s.labels) out += std::to_string(s.id) + "," + std::to_string(sp) + "\n";
    write_text_file(path("species.csv"), out);
  }
  {
    std::string out = "survey_id,species_id\n";
    for (const auto& s : test)
      for (int sp : s.labels) out += std::to_string(s.id) + "," + std::to_string(sp) + "\n";
    write_text_file(path("test_truth.csv"), out);
  }

  std::vector<const Survey*> inputs;
  for (const auto& s : train) inputs.push_back(&s);
  for (const auto& s : test) inputs.push_back(&s);

  // tabular features: latent fields sampled at the survey point, with planted
  // clipping violations, missing cells, infinities, and one-off outliers
  {
    Rng env_rng = substream(spec.seed, "data/synth/env");
    std::vector<LatentField> fields;
    for (int f = 0; f < spec.env_features; ++f) fields.push_back(LatentField::draw(env_rng));

    std::string out = "survey_id";
    out += ",human_footprint";
    for (int f = 1; f < spec.env_features; ++f) out += ",env" + std::to_string(f);
    out += "\n";
    for (const Survey* s : inputs) {
      out += std::to_string(s->id);
      for (int f = 0; f < spec.env_features; ++f) {
        double u = env_rng.uniform();
        if (u < spec.missing_rate) {
          out += ",";
          continue;
        }
        double v = fields[f].at(s->lat, s->lon) + 0.6 * env_rng.normal(0.0, 1.0);
        if (f == 0) {
          v = 120.0 + 90.0 * v;
          double roll = env_rng.uniform();
          if (roll < 0.04) v = 256.0 + 200.0 * env_rng.uniform();  // clipped to 255
          else if (roll < 0.08) v = -1.0 - 5.0 * env_rng.uniform();  // clipped to 1
        } else {
          double roll = env_rng.uniform();
          if (roll < 0.01) {
            out += (env_rng.uniform() < 0.5) ? ",inf" : ",-inf";
            continue;
          }
          if (roll < 0.02) v *= 400.0;  // z-score outlier
        }
        out += "," + format_fixed(v, 6);
      }
      out += "\n";
    }
    write_text_file(path("env.csv"), out);
  }

  // temporal cubes, raw (pre-trim) shapes, with missing values planted
  auto write_cubes = [&](const char* file, const char* stream, int channels, int rows, int cols) {
    Rng rng = substream(spec.seed, stream);
    std::vector<LatentField> fields;
    for (int c = 0; c < channels; ++c) fields.push_back(LatentField::draw(rng));
    TghTensor t;
    t.dims = {static_cast<std::uint32_t>(inputs.size()), static_cast<std::uint32_t>(channels),
              static_cast<std::uint32_t>(rows), static_cast<std::uint32_t>(cols)};
    t.data.reserve(t.numel());
    for (const Survey* s : inputs) {
      for (int c = 0; c < channels; ++c) {
        double base = fields[c].at(s->lat, s->lon);
        for (int r = 0; r < rows; ++r)
          for (int k = 0; k < cols; ++k) {
            if (rng.uniform() < spec.missing_rate) {
              t.data.push_back(std::numeric_limits<float>::quiet_NaN());
              continue;
            }
            double season = std::sin(6.283185307179586 * k / cols + c);
            double v = base + 0.5 * season + 0.05 * r + 0.75 * rng.normal(0.0, 1.0);
            t.data.push_back(static_cast<float>(v));
          }
      }
    }
    write_tgh(path(file), t);
  };
  write_cubes("cubes_a.tgh", "data/synth/cube_a", 4, 19, 12);
  write_cubes("cubes_b.tgh", "data/synth/cube_b", 6, 4, 21);

  // satellite-style images: the same fields sampled on a small grid around
  // the survey point, so the image stream sees the location too
  {
    Rng rng = substream(spec.seed, "data/synth/images");
    std::vector<LatentField> fields;
    for (int c = 0; c < spec.image_channels; ++c) fields.push_back(LatentField::draw(rng));
    int S = spec.image_size;
    TghTensor t;
    t.dims = {static_cast<std::uint32_t>(inputs.size()),
              static_cast<std::uint32_t>(spec.image_channels), static_cast<std::uint32_t>(S),
              static_cast<std::uint32_t>(S)};
    t.data.reserve(t.numel());
    for (const Survey* s : inputs) {
      for (int c = 0; c < spec.image_channels; ++c)
        for (int y = 0; y < S; ++y)
          for (int x = 0; x < S; ++x) {
            double lat = s->lat + 0.02 * (static_cast<double>(y) / S - 0.5);
            double lon = s->lon + 0.02 * (static_cast<double>(x) / S - 0.5);
            double v = fields[c].at(lat, lon) + 0.6 * rng.normal(0.0, 1.0);
            t.data.push_back(static_cast<float>(v));
          }
    }
    write_tgh(path("images.tgh"), t);
  }
}

}  // namespace tigh
