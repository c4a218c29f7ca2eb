#include "tigh/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tigh/csv.hpp"
#include "tigh/dataprep.hpp"
#include "tigh/errors.hpp"
#include "tigh/geograph.hpp"
#include "tigh/synth.hpp"
#include "tigh/tghio.hpp"
#include "tigh/trainer.hpp"

namespace tigh {

namespace fs = std::filesystem;

StagePaths StagePaths::from_run(const RunConfig& rc) {
  const std::string& root = rc.str("run.dir");
  StagePaths p;
  p.raw = root + "/raw";
  p.prep = root + "/prep";
  p.graph = root + "/graph";
  p.train = root + "/train";
  p.predict = root + "/predict";
  p.tune = root + "/tune";
  p.score = root + "/score";
  p.report = root + "/report";
  return p;
}

namespace {

void require(const std::string& stage, const std::string& path) {
  if (!fs::exists(path)) throw IoError("stage " + stage + ": missing input " + path);
}

struct MetaRow {
  long long id = 0;
  double lat = 0.0, lon = 0.0;
  int year = 0;
  std::string region;
  Split split = Split::train;
};

std::vector<MetaRow> read_metadata(const std::string& path) {
  CsvTable t = read_csv(path);
  int c_id = t.col_required("survey_id");
  int c_lat = t.col_required("lat");
  int c_lon = t.col_required("lon");
  int c_year = t.col_required("year");
  int c_region = t.col_required("region");
  int c_split = t.col_required("split");
  std::vector<MetaRow> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    MetaRow m;
    m.id = cell_to_int(row[c_id]);
    m.lat = cell_to_double(row[c_lat]);
    m.lon = cell_to_double(row[c_lon]);
    m.year = static_cast<int>(cell_to_int(row[c_year]));
    m.region = row[c_region];
    m.split = split_from_string(row[c_split]);
    out.push_back(std::move(m));
  }
  return out;
}

std::map<long long, std::vector<int>> read_species_lists(const std::string& path) {
  CsvTable t = read_csv(path);
  int c_id = t.col_required("survey_id");
  int c_sp = t.col_required("species_id");
  std::map<long long, std::vector<int>> out;
  for (const auto& row : t.rows)
    out[cell_to_int(row[c_id])].push_back(static_cast<int>(cell_to_int(row[c_sp])));
  for (auto& [id, list] : out) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return out;
}

// The label space is whatever the observation file mentions. Both prep and
// graph derive it with this rule, so label matrix, graph feature vectors, and
// model output all share one width.
int species_universe(const std::map<long long, std::vector<int>>& lists) {
  int max_id = -1;
  for (const auto& [id, list] : lists)
    for (int s : list) max_id = std::max(max_id, s);
  if (max_id < 0) throw InputError("species file names no species");
  return max_id + 1;
}

Tensor<float> load_matrix(const std::string& path) {
  TghTensor t = read_tgh(path);
  if (t.dims.empty() || t.dims[0] == 0) throw InputError(path + ": empty tensor");
  int rows = static_cast<int>(t.dims[0]);
  int cols = static_cast<int>(t.numel() / t.dims[0]);
  Tensor<float> m(rows, cols);
  m.data = t.data;
  return m;
}

void save_matrix(const std::string& path, const std::vector<std::uint32_t>& dims,
                 const std::vector<float>& data) {
  TghTensor t;
  t.dims = dims;
  t.data = data;
  write_tgh(path, t);
}

std::vector<long long> read_id_column(const std::string& path) {
  CsvTable t = read_csv(path);
  int c = t.col_required("survey_id");
  std::vector<long long> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) out.push_back(cell_to_int(row[c]));
  return out;
}

struct PrepIndex {
  std::vector<long long> ids;  // model rows, metadata order (train then test)
  std::vector<bool> is_train;
  std::vector<int> train_rows, test_rows;
};

PrepIndex read_prep_ids(const std::string& path) {
  CsvTable t = read_csv(path);
  int c_id = t.col_required("survey_id");
  int c_split = t.col_required("split");
  PrepIndex ix;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    ix.ids.push_back(cell_to_int(t.rows[r][c_id]));
    bool train = t.rows[r][c_split] == "train";
    ix.is_train.push_back(train);
    (train ? ix.train_rows : ix.test_rows).push_back(static_cast<int>(r));
  }
  return ix;
}

// Streams for every model row; labels cover train rows only and are zero for
// the rest.
template <class Real>
Dataset<Real> load_streams(const std::string& stage, const StagePaths& p, const PrepIndex& ix,
                           int* n_species_out) {
  for (const char* f : {"features.tgh", "labels.tgh", "cubes_a.tgh", "cubes_b.tgh", "images.tgh"})
    require(stage, p.prep + "/" + f);
  require(stage, p.graph + "/gfv.tgh");
  require(stage, p.graph + "/gfv_ids.csv");

  Dataset<Real> d;
  for (long long id : ix.ids) d.ids.push_back(static_cast<int>(id));
  d.tab = Tensor<Real>::convert(load_matrix(p.prep + "/features.tgh"));
  d.cube_a = Tensor<Real>::convert(load_matrix(p.prep + "/cubes_a.tgh"));
  d.cube_b = Tensor<Real>::convert(load_matrix(p.prep + "/cubes_b.tgh"));
  d.image = Tensor<Real>::convert(load_matrix(p.prep + "/images.tgh"));
  d.gfv = Tensor<Real>::convert(load_matrix(p.graph + "/gfv.tgh"));
  int n = static_cast<int>(ix.ids.size());
  for (const Tensor<Real>* m : {&d.tab, &d.cube_a, &d.cube_b, &d.image, &d.gfv})
    if (m->rows != n) throw InputError("stage " + stage + ": stream row count mismatch");
  if (read_id_column(p.graph + "/gfv_ids.csv") != ix.ids)
    throw InputError("stage " + stage + ": graph vectors keyed to different surveys");

  Tensor<Real> train_labels = Tensor<Real>::convert(load_matrix(p.prep + "/labels.tgh"));
  if (train_labels.rows != static_cast<int>(ix.train_rows.size()))
    throw InputError("stage " + stage + ": label rows do not match the train split");
  int n_species = train_labels.cols;
  if (d.gfv.cols != n_species)
    throw InputError("stage " + stage + ": graph vector width does not match the label space");
  d.labels = Tensor<Real>(n, n_species);
  for (std::size_t t = 0; t < ix.train_rows.size(); ++t)
    for (int j = 0; j < n_species; ++j)
      d.labels.at(ix.train_rows[t], j) = train_labels.at(static_cast<int>(t), j);
  *n_species_out = n_species;
  return d;
}

template <class Real>
std::vector<double> forward_probs(const TighModel<Real>& model, const Dataset<Real>& d, int r) {
  Tape<Real> t;
  int p = model.forward(t, t.input(tensor_row(d.cube_a, r)), t.input(tensor_row(d.cube_b, r)),
                        t.input(tensor_row(d.image, r)), t.input(tensor_row(d.tab, r)),
                        t.input(tensor_row(d.gfv, r)));
  const Tensor<Real>& v = t.val(p);
  std::vector<double> out(v.cols);
  for (int j = 0; j < v.cols; ++j) out[j] = static_cast<double>(v.at(0, j));
  return out;
}

std::vector<std::vector<double>> load_probs(const std::string& path) {
  Tensor<float> m = load_matrix(path);
  std::vector<std::vector<double>> out(m.rows, std::vector<double>(m.cols));
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) out[i][j] = static_cast<double>(m.at(i, j));
  return out;
}

std::vector<std::vector<int>> label_sets(const Tensor<float>& labels) {
  std::vector<std::vector<int>> out(labels.rows);
  for (int i = 0; i < labels.rows; ++i)
    for (int j = 0; j < labels.cols; ++j)
      if (labels.at(i, j) > 0.5f) out[i].push_back(j);
  return out;
}

std::string join_ids(const std::vector<int>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? " " : "") + std::to_string(ids[i]);
  return s;
}

struct BestCell {
  int k = 0;
  double theta = 0.0;
};

BestCell read_best(const std::string& stage, const std::string& path) {
  require(stage, path);
  CsvTable t = read_csv(path);
  if (t.rows.size() != 1) throw InputError("stage " + stage + ": " + path + " must hold one row");
  BestCell b;
  b.k = static_cast<int>(cell_to_int(t.rows[0][t.col_required("K")]));
  b.theta = cell_to_double(t.rows[0][t.col_required("theta")]);
  return b;
}

void copy_file_contents(const std::string& from, const std::string& to) {
  write_text_file(to, read_binary_file(from));
}

}  // namespace

void run_synth(const RunConfig& rc) {
  StagePaths p = StagePaths::from_run(rc);
  generate_synthetic(SynthSpec::from_run(rc), p.raw);
}

void run_prep(const RunConfig& rc) {
  const std::string stage = "prep";
  StagePaths p = StagePaths::from_run(rc);
  for (const char* f : {"metadata.csv", "env.csv", "species.csv", "cubes_a.tgh", "cubes_b.tgh",
                        "images.tgh"})
    require(stage, p.raw + "/" + f);
  fs::create_directories(p.prep);

  std::vector<MetaRow> meta = read_metadata(p.raw + "/metadata.csv");
  std::vector<const MetaRow*> rows;
  for (const auto& m : meta)
    if (m.split != Split::aux) rows.push_back(&m);
  int n = static_cast<int>(rows.size());
  if (n == 0) throw InputError("stage prep: no train or test surveys in metadata");

  // tabular features: cleaned numeric columns, then the region one-hot
  CsvTable env = read_csv(p.raw + "/env.csv");
  int c_id = env.col_required("survey_id");
  std::map<long long, const std::vector<std::string>*> env_by_id;
  for (const auto& row : env.rows) env_by_id[cell_to_int(row[c_id])] = &row;

  std::set<std::string> clip_cols;
  for (const auto& name : rc.str_list("prep.clip_columns")) clip_cols.insert(name);
  double outlier_z = rc.num("prep.outlier_z");

  int n_env = static_cast<int>(env.header.size()) - 1;
  if (n_env <= 0) throw InputError("stage prep: env file has no feature columns");
  std::vector<std::vector<double>> cleaned(n_env);
  std::string stats_csv = "column,outlier_mean,outlier_std,impute_mean,mean,stddev\n";
  for (int f = 0; f < n_env; ++f) {
    const std::string& name = env.header[f + 1];
    int col = env.col_required(name);
    std::vector<double> raw(n), train_vals;
    for (int i = 0; i < n; ++i) {
      auto it = env_by_id.find(rows[i]->id);
      if (it == env_by_id.end())
        throw InputError("stage prep: no env row for survey " + std::to_string(rows[i]->id));
      raw[i] = cell_to_double((*it->second)[col]);
      if (rows[i]->split == Split::train) train_vals.push_back(raw[i]);
    }
    CleanOptions opt{clip_cols.count(name) > 0, outlier_z};
    ColumnStats stats = fit_column(train_vals, opt);
    cleaned[f] = clean_column(raw, stats, opt);
    stats_csv += name + "," + format_fixed(stats.outlier_mean, 6) + "," +
                 format_fixed(stats.outlier_std, 6) + "," + format_fixed(stats.impute_mean, 6) +
                 "," + format_fixed(stats.mean, 6) + "," + format_fixed(stats.stddev, 6) + "\n";
  }

  std::vector<std::string> train_regions;
  for (const MetaRow* m : rows)
    if (m->split == Split::train) train_regions.push_back(m->region);
  OneHotVocab vocab = OneHotVocab::from_values(train_regions);
  int n_cat = static_cast<int>(vocab.categories.size());

  std::vector<float> features;
  features.reserve(static_cast<std::size_t>(n) * (n_env + n_cat));
  for (int i = 0; i < n; ++i) {
    for (int f = 0; f < n_env; ++f) features.push_back(static_cast<float>(cleaned[f][i]));
    for (double v : vocab.encode(rows[i]->region)) features.push_back(static_cast<float>(v));
  }
  save_matrix(p.prep + "/features.tgh",
              {static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n_env + n_cat)},
              features);

  std::string ids_csv = "survey_id,split\n";
  for (const MetaRow* m : rows)
    ids_csv += std::to_string(m->id) + "," + split_to_string(m->split) + "\n";
  write_text_file(p.prep + "/ids.csv", ids_csv);

  // labels for the train split, in the same row order
  auto lists = read_species_lists(p.raw + "/species.csv");
  int n_species = species_universe(lists);
  std::vector<long long> train_ids;
  std::vector<std::vector<int>> train_lists;
  for (const MetaRow* m : rows)
    if (m->split == Split::train) {
      train_ids.push_back(m->id);
      auto it = lists.find(m->id);
      train_lists.push_back(it == lists.end() ? std::vector<int>{} : it->second);
    }
  LabelMatrix lm = encode_labels(train_ids, train_lists, n_species);
  save_matrix(p.prep + "/labels.tgh",
              {static_cast<std::uint32_t>(train_ids.size()), static_cast<std::uint32_t>(n_species)},
              lm.values);

  // cubes: trim to the patch grid, fill missing cells
  auto prep_cubes = [&](const char* file, const std::string& shape_key,
                        const std::string& patch_key) {
    std::vector<int> shape = rc.dims(shape_key);
    std::pair<int, int> patch = rc.dims2(patch_key);
    TghTensor raw = read_tgh(p.raw + "/" + file);
    if (raw.dims.size() != 4 || static_cast<int>(raw.dims[0]) != n ||
        static_cast<int>(raw.dims[1]) != shape[0] || static_cast<int>(raw.dims[2]) != shape[1] ||
        static_cast<int>(raw.dims[3]) != shape[2])
      throw InputError("stage prep: " + std::string(file) + " shape does not match the config");
    CubeFamily fam{shape[0], shape[1], shape[2], patch.first, patch.second};
    int th = fam.trimmed_rows(), tw = fam.trimmed_cols();
    std::vector<float> out;
    out.reserve(static_cast<std::size_t>(n) * shape[0] * th * tw);
    std::size_t per = static_cast<std::size_t>(shape[0]) * shape[1] * shape[2];
    for (int i = 0; i < n; ++i) {
      TemporalCube cube(shape[0], shape[1], shape[2]);
      std::copy_n(raw.data.begin() + static_cast<std::ptrdiff_t>(per) * i, per, cube.data.begin());
      TemporalCube done = fill_cube_missing(trim_cube(cube, fam));
      out.insert(out.end(), done.data.begin(), done.data.end());
    }
    save_matrix(p.prep + "/" + file,
                {static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(shape[0]),
                 static_cast<std::uint32_t>(th), static_cast<std::uint32_t>(tw)},
                out);
  };
  prep_cubes("cubes_a.tgh", "temporal.familyA.shape", "temporal.familyA.patch");
  prep_cubes("cubes_b.tgh", "temporal.familyB.shape", "temporal.familyB.patch");

  // images: resample to the model resolution when the source differs
  {
    int channels = static_cast<int>(rc.integer("image.channels"));
    int size = static_cast<int>(rc.integer("image.size"));
    TghTensor raw = read_tgh(p.raw + "/images.tgh");
    if (raw.dims.size() != 4 || static_cast<int>(raw.dims[0]) != n ||
        static_cast<int>(raw.dims[1]) != channels || raw.dims[2] != raw.dims[3])
      throw InputError("stage prep: images.tgh shape does not match the config");
    int src = static_cast<int>(raw.dims[2]);
    std::vector<float> out;
    out.reserve(static_cast<std::size_t>(n) * channels * size * size);
    std::size_t per = static_cast<std::size_t>(channels) * src * src;
    for (int i = 0; i < n; ++i) {
      std::vector<float> img(raw.data.begin() + static_cast<std::ptrdiff_t>(per) * i,
                             raw.data.begin() + static_cast<std::ptrdiff_t>(per) * (i + 1));
      if (src != size) img = resize_image(img, channels, src, src, size, size);
      out.insert(out.end(), img.begin(), img.end());
    }
    save_matrix(p.prep + "/images.tgh",
                {static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(channels),
                 static_cast<std::uint32_t>(size), static_cast<std::uint32_t>(size)},
                out);
  }

  write_text_file(p.prep + "/column_stats.csv", stats_csv);
}

void run_graph(const RunConfig& rc) {
  const std::string stage = "graph";
  StagePaths p = StagePaths::from_run(rc);
  require(stage, p.raw + "/metadata.csv");
  require(stage, p.raw + "/species.csv");
  fs::create_directories(p.graph);

  std::vector<MetaRow> meta = read_metadata(p.raw + "/metadata.csv");
  auto lists = read_species_lists(p.raw + "/species.csv");
  int n_species = species_universe(lists);

  std::map<std::string, int> region_index;
  for (const auto& m : meta) region_index.emplace(m.region, 0);
  int next = 0;
  for (auto& [name, idx] : region_index) idx = next++;

  auto node_of = [&](const MetaRow& m) {
    SurveyNode n;
    n.id = m.id;
    n.lat = m.lat;
    n.lon = m.lon;
    n.year = m.year;
    n.region = region_index.at(m.region);
    n.split = m.split;
    if (m.split != Split::test) {
      auto it = lists.find(m.id);
      if (it != lists.end()) n.labels = it->second;
    }
    return n;
  };

  std::vector<SurveyNode> base_nodes, all_nodes;
  std::vector<long long> model_ids, test_ids;
  for (const auto& m : meta) {
    all_nodes.push_back(node_of(m));
    if (m.split != Split::aux) {
      base_nodes.push_back(all_nodes.back());
      model_ids.push_back(m.id);
    }
    if (m.split == Split::test) test_ids.push_back(m.id);
  }

  bool enabled = rc.flag("graph.enabled");
  std::string edges_csv = "src,dst,weight\n";
  std::vector<std::vector<double>> gfv(model_ids.size(),
                                       std::vector<double>(n_species, 0.0));
  std::map<long long, std::vector<int>> shortlists;
  for (long long id : test_ids) shortlists[id];

  if (enabled) {
    GraphOptions opt;
    opt.d_max_km = rc.num("graph.d_max_km");
    opt.weight_constant = rc.num("graph.weight_constant");
    opt.threads = static_cast<int>(rc.integer("threads"));

    // the neighborhood features come from the train+test graph; the aux
    // extension exists only to compile shortlists
    SurveyGraph base = build_edges(base_nodes, opt);
    for (const auto& e : base.edges)
      edges_csv += std::to_string(base.nodes[e.i].id) + "," + std::to_string(base.nodes[e.j].id) +
                   "," + format_fixed(e.weight, 6) + "\n";
    gfv = compute_gfv(base, n_species, opt.threads);
    rescale_gfv(gfv);

    SurveyGraph full = build_edges(all_nodes, opt);
    ShortlistOptions sopt;
    sopt.top_train = static_cast<int>(rc.integer("graph.shortlist_n"));
    sopt.min_train_count = static_cast<int>(rc.integer("graph.shortlist_l"));
    sopt.top_aux = static_cast<int>(rc.integer("graph.shortlist_a"));
    sopt.min_aux_count = static_cast<int>(rc.integer("graph.shortlist_m"));
    shortlists = compile_shortlists(full, sopt);
  }

  write_text_file(p.graph + "/edges.csv", edges_csv);

  std::vector<float> gfv_data;
  gfv_data.reserve(model_ids.size() * static_cast<std::size_t>(n_species));
  for (const auto& row : gfv)
    for (double v : row) gfv_data.push_back(static_cast<float>(v));
  save_matrix(p.graph + "/gfv.tgh",
              {static_cast<std::uint32_t>(model_ids.size()),
               static_cast<std::uint32_t>(n_species)},
              gfv_data);
  std::string gfv_ids = "survey_id\n";
  for (long long id : model_ids) gfv_ids += std::to_string(id) + "\n";
  write_text_file(p.graph + "/gfv_ids.csv", gfv_ids);

  std::string short_csv = "survey_id,species_ids\n";
  for (const auto& [id, species] : shortlists)
    short_csv += std::to_string(id) + "," + join_ids(species) + "\n";
  write_text_file(p.graph + "/shortlists.csv", short_csv);
}

void run_train(const RunConfig& rc) {
  const std::string stage = "train";
  StagePaths p = StagePaths::from_run(rc);
  require(stage, p.prep + "/ids.csv");
  PrepIndex ix = read_prep_ids(p.prep + "/ids.csv");
  int n_species = 0;
  Dataset<float> all = load_streams<float>(stage, p, ix, &n_species);
  Dataset<float> data = all.rows(ix.train_rows);
  fs::create_directories(p.train);

  ModelConfig cfg = ModelConfig::from_run(rc, all.tab.cols, n_species);
  TrainSettings s = TrainSettings::from_run(rc);
  int k = static_cast<int>(rc.integer("train.folds"));
  CrossFusionResult res = cross_fusion(cfg, data, s, k);

  TighModel<float> saver(cfg);
  for (int i = 0; i < k; ++i) {
    saver.params().restore(res.folds[i].best_params);
    saver.save(p.train + "/fold" + std::to_string(i + 1) + ".ckpt");
  }

  std::string log_csv = "fold,epoch,train_bce,val_bce,seconds\n";
  for (const auto& row : res.log)
    log_csv += std::to_string(row.fold) + "," + std::to_string(row.epoch) + "," +
               format_fixed(row.train_bce, 6) + "," + format_fixed(row.val_bce, 6) + "," +
               format_fixed(row.seconds, 3) + "\n";
  write_text_file(p.train + "/log.csv", log_csv);

  std::string check_csv = "fold,init_checksum,final_checksum,best_val_bce,best_epoch,epochs_run\n";
  for (const auto& f : res.folds)
    check_csv += std::to_string(f.fold) + "," + f.init_checksum + "," + f.final_checksum + "," +
                 format_fixed(f.best_val_bce, 6) + "," + std::to_string(f.best_epoch) + "," +
                 std::to_string(f.epochs_run) + "\n";
  write_text_file(p.train + "/checksums.csv", check_csv);
}

void run_predict(const RunConfig& rc) {
  const std::string stage = "predict";
  StagePaths p = StagePaths::from_run(rc);
  require(stage, p.prep + "/ids.csv");
  PrepIndex ix = read_prep_ids(p.prep + "/ids.csv");
  int n_species = 0;
  Dataset<float> all = load_streams<float>(stage, p, ix, &n_species);
  fs::create_directories(p.predict);

  ModelConfig cfg = ModelConfig::from_run(rc, all.tab.cols, n_species);
  int k = static_cast<int>(rc.integer("train.folds"));
  std::uint64_t seed = static_cast<std::uint64_t>(rc.integer("seed"));
  int n_train = static_cast<int>(ix.train_rows.size());
  FoldPlan plan = FoldPlan::make(n_train, k, seed);

  // out-of-fold probabilities for every training survey, and each fold
  // model's probabilities for every test survey
  std::vector<std::vector<double>> val_probs(n_train);
  std::vector<std::vector<std::vector<double>>> test_by_fold(
      ix.test_rows.size(), std::vector<std::vector<double>>(k));
  TighModel<float> model(cfg);
  for (int j = 0; j < k; ++j) {
    std::string ckpt = p.train + "/fold" + std::to_string(j + 1) + ".ckpt";
    require(stage, ckpt);
    model.load(ckpt);
    for (int r : plan.members(j))
      val_probs[r] = forward_probs(model, all, ix.train_rows[r]);
    for (std::size_t t = 0; t < ix.test_rows.size(); ++t)
      test_by_fold[t][j] = forward_probs(model, all, ix.test_rows[t]);
  }

  auto dump = [&](const std::string& path, const std::vector<std::vector<double>>& probs) {
    std::vector<float> data;
    data.reserve(probs.size() * static_cast<std::size_t>(n_species));
    for (const auto& row : probs)
      for (double v : row) data.push_back(static_cast<float>(v));
    save_matrix(path, {static_cast<std::uint32_t>(probs.size()),
                       static_cast<std::uint32_t>(n_species)},
                data);
  };
  dump(p.predict + "/val_probs.tgh", val_probs);

  std::vector<std::vector<double>> test_probs;
  for (auto& per_fold : test_by_fold) test_probs.push_back(average_logits(per_fold));
  dump(p.predict + "/test_probs.tgh", test_probs);

  std::string val_ids = "survey_id\n", test_ids = "survey_id\n";
  for (int r : ix.train_rows) val_ids += std::to_string(ix.ids[r]) + "\n";
  for (int r : ix.test_rows) test_ids += std::to_string(ix.ids[r]) + "\n";
  write_text_file(p.predict + "/val_ids.csv", val_ids);
  write_text_file(p.predict + "/test_ids.csv", test_ids);
}

GridResult run_tune(const RunConfig& rc) {
  const std::string stage = "tune";
  StagePaths p = StagePaths::from_run(rc);
  require(stage, p.predict + "/val_probs.tgh");
  require(stage, p.predict + "/val_ids.csv");
  require(stage, p.prep + "/labels.tgh");
  fs::create_directories(p.tune);

  std::vector<std::vector<double>> probs = load_probs(p.predict + "/val_probs.tgh");
  Tensor<float> labels = load_matrix(p.prep + "/labels.tgh");
  if (static_cast<int>(probs.size()) != labels.rows)
    throw InputError("stage tune: validation probabilities do not match the label rows");
  std::vector<std::vector<int>> truth = label_sets(labels);

  GridSpec spec;
  spec.k_min = static_cast<int>(rc.integer("topk.k_min"));
  spec.k_max = static_cast<int>(rc.integer("topk.k_max"));
  spec.theta_min = rc.num("topk.theta_min");
  spec.theta_max = rc.num("topk.theta_max");
  spec.theta_step = rc.num("topk.theta_step");
  TopkMode mode = topk_mode_from_string(rc.str("topk.mode"));
  GridResult g = grid_search(probs, truth, spec, mode, static_cast<int>(rc.integer("threads")));

  std::string heat = "K,theta,f1\n";
  for (const auto& cell : g.cells)
    heat += std::to_string(cell.k) + "," + format_fixed(cell.theta, 6) + "," +
            format_fixed(cell.f1, 6) + "\n";
  write_text_file(p.tune + "/heatmap.csv", heat);
  write_text_file(p.tune + "/best.csv",
                  "K,theta,f1\n" + std::to_string(g.best_k) + "," +
                      format_fixed(g.best_theta, 6) + "," + format_fixed(g.best_f1, 6) + "\n");
  return g;
}

double run_score(const RunConfig& rc) {
  const std::string stage = "score";
  StagePaths p = StagePaths::from_run(rc);
  require(stage, p.predict + "/val_probs.tgh");
  require(stage, p.prep + "/labels.tgh");
  BestCell best = read_best(stage, p.tune + "/best.csv");
  fs::create_directories(p.score);

  std::vector<std::vector<double>> probs = load_probs(p.predict + "/val_probs.tgh");
  Tensor<float> labels = load_matrix(p.prep + "/labels.tgh");
  if (static_cast<int>(probs.size()) != labels.rows)
    throw InputError("stage score: validation probabilities do not match the label rows");
  TopkMode mode = topk_mode_from_string(rc.str("topk.mode"));

  std::vector<std::vector<int>> preds;
  preds.reserve(probs.size());
  for (const auto& row : probs) preds.push_back(threshold_topk(row, best.k, best.theta, mode));
  double f1 = samplewise_f1(preds, label_sets(labels));
  write_text_file(p.score + "/score.csv", "f1\n" + format_fixed(f1, 6) + "\n");
  return f1;
}

void run_report(const RunConfig& rc) {
  const std::string stage = "report";
  StagePaths p = StagePaths::from_run(rc);
  require(stage, p.predict + "/test_probs.tgh");
  require(stage, p.predict + "/test_ids.csv");
  require(stage, p.graph + "/shortlists.csv");
  require(stage, p.graph + "/edges.csv");
  require(stage, p.tune + "/heatmap.csv");
  require(stage, p.train + "/log.csv");
  require(stage, p.score + "/score.csv");
  require(stage, p.prep + "/ids.csv");
  BestCell best = read_best(stage, p.tune + "/best.csv");
  fs::create_directories(p.report);

  // submission: tuned operating point, then the shortlist union
  std::map<long long, std::vector<int>> shortlists;
  {
    CsvTable t = read_csv(p.graph + "/shortlists.csv");
    int c_id = t.col_required("survey_id");
    int c_sp = t.col_required("species_ids");
    for (const auto& row : t.rows) {
      std::vector<int>& list = shortlists[cell_to_int(row[c_id])];
      std::string cur;
      for (char c : row[c_sp] + " ") {
        if (c == ' ') {
          if (!cur.empty()) list.push_back(static_cast<int>(cell_to_int(cur)));
          cur.clear();
        } else {
          cur += c;
        }
      }
    }
  }
  TopkMode mode = topk_mode_from_string(rc.str("topk.mode"));
  std::vector<std::vector<double>> test_probs = load_probs(p.predict + "/test_probs.tgh");
  std::vector<long long> test_ids = read_id_column(p.predict + "/test_ids.csv");
  if (test_ids.size() != test_probs.size())
    throw InputError("stage report: test ids do not match the probability rows");
  std::string submission = "surveyId,predictions\n";
  for (std::size_t i = 0; i < test_ids.size(); ++i) {
    std::vector<int> pred = threshold_topk(test_probs[i], best.k, best.theta, mode);
    auto it = shortlists.find(test_ids[i]);
    if (it != shortlists.end()) pred = correct_output(pred, it->second);
    submission += std::to_string(test_ids[i]) + "," + join_ids(pred) + "\n";
  }
  write_text_file(p.report + "/submission.csv", submission);

  copy_file_contents(p.tune + "/heatmap.csv", p.report + "/heatmap.csv");
  copy_file_contents(p.train + "/log.csv", p.report + "/loss_curves.csv");

  // degree histogram over the train+test graph
  {
    PrepIndex ix = read_prep_ids(p.prep + "/ids.csv");
    std::map<long long, int> index_of;
    for (std::size_t i = 0; i < ix.ids.size(); ++i) index_of[ix.ids[i]] = static_cast<int>(i);
    SurveyGraph g;
    g.nodes.resize(ix.ids.size());
    g.degree.assign(ix.ids.size(), 0);
    CsvTable t = read_csv(p.graph + "/edges.csv");
    if (!t.rows.empty()) {
      int c_src = t.col_required("src");
      int c_dst = t.col_required("dst");
      for (const auto& row : t.rows) {
        auto si = index_of.find(cell_to_int(row[c_src]));
        auto di = index_of.find(cell_to_int(row[c_dst]));
        if (si == index_of.end() || di == index_of.end())
          throw InputError("stage report: edge endpoint is not a model survey");
        ++g.degree[si->second];
        ++g.degree[di->second];
      }
    }
    DegreeStats st = degree_stats(g);
    std::string hist = "histogram,lo,hi,count\n";
    for (const auto& b : st.degree)
      hist += "degree," + format_fixed(b.lo, 2) + "," + format_fixed(b.hi, 2) + "," +
              std::to_string(b.count) + "\n";
    for (const auto& b : st.sqrt_degree)
      hist += "sqrt_degree," + format_fixed(b.lo, 2) + "," + format_fixed(b.hi, 2) + "," +
              std::to_string(b.count) + "\n";
    write_text_file(p.report + "/degree_hist.csv", hist);
  }

  // headline numbers in one place
  {
    PrepIndex ix = read_prep_ids(p.prep + "/ids.csv");
    CsvTable score = read_csv(p.score + "/score.csv");
    CsvTable edges = read_csv(p.graph + "/edges.csv");
    Tensor<float> labels = load_matrix(p.prep + "/labels.tgh");
    std::string summary = "key,value\n";
    summary += "n_train," + std::to_string(ix.train_rows.size()) + "\n";
    summary += "n_test," + std::to_string(ix.test_rows.size()) + "\n";
    summary += "n_species," + std::to_string(labels.cols) + "\n";
    summary += "n_edges," + std::to_string(edges.rows.size()) + "\n";
    summary += "folds," + rc.str("train.folds") + "\n";
    summary += "best_k," + std::to_string(best.k) + "\n";
    summary += "best_theta," + format_fixed(best.theta, 6) + "\n";
    summary += "val_f1," + score.rows.at(0).at(score.col_required("f1")) + "\n";
    write_text_file(p.report + "/summary.csv", summary);
  }
}

}  // namespace tigh
