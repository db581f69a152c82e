#include "sgwc/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "sgwc/binary_io.hpp"
#include "sgwc/global_descriptor.hpp"
#include "sgwc/laplacian.hpp"
#include "sgwc/mesh.hpp"
#include "sgwc/sgw.hpp"
#include "sgwc/signatures.hpp"
#include "sgwc/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sgwc {

namespace {

constexpr int kShapeDnaLength = 10;
constexpr int kCShapeDnaLength = 33;
constexpr int kGpsLength = 10;

std::string hex64(std::uint64_t v)
{
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4)
        s[i] = digits[v & 0xf];
    return s;
}

std::uint64_t mix(std::uint64_t state, std::uint64_t value)
{
    return fnv1a64_value(value, state);
}

std::uint64_t mix(std::uint64_t state, double value)
{
    return fnv1a64_value(std::bit_cast<std::uint64_t>(value), state);
}

// ---------- cache layout ----------

fs::path eig_cache_path(const fs::path& dir, std::uint64_t hash, int q)
{
    return dir / (hex64(hash) + "-q" + std::to_string(q) + ".eig");
}

fs::path local_cache_path(const fs::path& dir, std::uint64_t hash, int q, int r,
                          DescriptorKind kind)
{
    const char* ext = kind == DescriptorKind::GaBofHks ? ".hks" : ".sgws";
    return dir / (hex64(hash) + "-q" + std::to_string(q) + "-R" + std::to_string(r) + ext);
}

fs::path geo_cache_path(const fs::path& dir, std::uint64_t hash)
{
    return dir / (hex64(hash) + ".geo");
}

void save_matrix_cache(const std::string& path, const Eigen::MatrixXd& m)
{
    atomic_file_write(path, [&](BinaryWriter& w) {
        w.header("SGWCMAT\0", 1);
        w.u64(static_cast<std::uint64_t>(m.rows()));
        w.u64(static_cast<std::uint64_t>(m.cols()));
        w.matrix(m);
    });
}

Eigen::MatrixXd load_matrix_cache(const std::string& path)
{
    BinaryReader r(path);
    r.header("SGWCMAT\0");
    const auto rows = static_cast<Eigen::Index>(r.u64());
    const auto cols = static_cast<Eigen::Index>(r.u64());
    return r.matrix(rows, cols);
}

// ---------- dataset helpers ----------

LabeledDataset dataset_subset(const LabeledDataset& data, const std::vector<int>& keep)
{
    LabeledDataset part;
    part.class_names = data.class_names;
    part.X.resize(data.X.rows(), keep.size());
    part.y.reserve(keep.size());
    for (std::size_t c = 0; c < keep.size(); ++c) {
        part.X.col(c) = data.X.col(keep[c]);
        part.y.push_back(data.y[keep[c]]);
    }
    return part;
}

int global_vector_length(DescriptorKind kind)
{
    switch (kind) {
    case DescriptorKind::ShapeDna: return kShapeDnaLength;
    case DescriptorKind::CShapeDna: return kCShapeDnaLength;
    case DescriptorKind::GpsEmbedding: return kGpsLength;
    default: throw Error("descriptor kind is not a global spectral vector");
    }
}

}  // namespace

// ---------- kinds ----------

std::string kind_name(DescriptorKind kind)
{
    switch (kind) {
    case DescriptorKind::SgwcBof: return "sgwc-bof";
    case DescriptorKind::GaBofHks: return "ga-bof-hks";
    case DescriptorKind::ShapeDna: return "shape-dna";
    case DescriptorKind::CShapeDna: return "cshape-dna";
    case DescriptorKind::GpsEmbedding: return "gps-embedding";
    }
    throw Error("unknown descriptor kind");
}

DescriptorKind parse_kind(const std::string& name)
{
    for (DescriptorKind kind :
         {DescriptorKind::SgwcBof, DescriptorKind::GaBofHks, DescriptorKind::ShapeDna,
          DescriptorKind::CShapeDna, DescriptorKind::GpsEmbedding})
        if (kind_name(kind) == name)
            return kind;
    throw Error("unknown descriptor kind '" + name +
                "' (expected sgwc-bof, ga-bof-hks, shape-dna, cshape-dna, or "
                "gps-embedding)");
}

bool kind_uses_bof(DescriptorKind kind)
{
    return kind == DescriptorKind::SgwcBof || kind == DescriptorKind::GaBofHks;
}

// ---------- config ----------

void validate_config(const ExperimentConfig& config)
{
    if (config.q < 1)
        throw Error("config: q must be positive");
    if (config.resolution < 1)
        throw Error("config: resolution must be positive");
    if (config.vocab_size < 1)
        throw Error("config: vocabulary size must be positive");
    if (config.epsilon <= 0.0)
        throw Error("config: epsilon must be positive");
    if (config.test_fraction <= 0.0 || config.test_fraction >= 1.0)
        throw Error("config: test fraction must lie strictly between 0 and 1");
    if (config.repetitions < 1)
        throw Error("config: repetitions must be positive");
    if (config.c_grid.empty())
        throw Error("config: C grid must not be empty");
    for (double c : config.c_grid)
        if (c <= 0.0)
            throw Error("config: C values must be positive");
    if (config.threads < 0)
        throw Error("config: threads must be >= 0");
}

std::string resolved_cache_dir(const ExperimentConfig& config)
{
    if (!config.cache_dir.empty())
        return config.cache_dir;
    if (const char* env = std::getenv("SGWC_CACHE_DIR"); env && *env)
        return env;
    return (fs::path(config.out_dir) / "cache").string();
}

namespace {

json config_json(const ExperimentConfig& c)
{
    return json{{"manifest", c.manifest},
                {"q", c.q},
                {"resolution", c.resolution},
                {"k", c.vocab_size},
                {"epsilon", c.epsilon},
                {"kind", kind_name(c.kind)},
                {"test_fraction", c.test_fraction},
                {"repetitions", c.repetitions},
                {"seed", c.seed},
                {"c_grid", c.c_grid},
                {"cache_dir", c.cache_dir},
                {"out_dir", c.out_dir},
                {"threads", c.threads},
                {"vocab_per_run", c.vocab_per_run}};
}

}  // namespace

std::string config_to_json(const ExperimentConfig& config)
{
    return config_json(config).dump(2) + "\n";
}

ExperimentConfig config_from_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error("config file " + path + ": " + e.what());
    }
    ExperimentConfig c;
    const std::set<std::string> known = {
        "manifest", "q",     "resolution", "k",         "epsilon",
        "kind",     "test_fraction", "repetitions", "seed", "c_grid",
        "cache_dir", "out_dir", "threads", "vocab_per_run"};
    for (const auto& [key, value] : j.items())
        if (!known.count(key))
            throw Error("config file " + path + ": unknown field '" + key + "'");
    try {
        if (j.contains("manifest")) c.manifest = j["manifest"].get<std::string>();
        if (j.contains("q")) c.q = j["q"].get<int>();
        if (j.contains("resolution")) c.resolution = j["resolution"].get<int>();
        if (j.contains("k")) c.vocab_size = j["k"].get<int>();
        if (j.contains("epsilon")) c.epsilon = j["epsilon"].get<double>();
        if (j.contains("kind")) c.kind = parse_kind(j["kind"].get<std::string>());
        if (j.contains("test_fraction"))
            c.test_fraction = j["test_fraction"].get<double>();
        if (j.contains("repetitions")) c.repetitions = j["repetitions"].get<int>();
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("c_grid")) c.c_grid = j["c_grid"].get<std::vector<double>>();
        if (j.contains("cache_dir")) c.cache_dir = j["cache_dir"].get<std::string>();
        if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
        if (j.contains("threads")) c.threads = j["threads"].get<int>();
        if (j.contains("vocab_per_run"))
            c.vocab_per_run = j["vocab_per_run"].get<bool>();
    } catch (const json::exception& e) {
        throw Error("config file " + path + ": " + e.what());
    }
    return c;
}

// ---------- manifest ----------

DatasetManifest load_manifest(const std::string& path)
{
    std::vector<std::pair<std::string, std::string>> entries;  // (path, class)
    if (fs::is_directory(path)) {
        std::vector<fs::path> class_dirs;
        for (const auto& entry : fs::directory_iterator(path))
            if (entry.is_directory() && entry.path().filename().string().front() != '.')
                class_dirs.push_back(entry.path());
        std::sort(class_dirs.begin(), class_dirs.end());
        for (const auto& dir : class_dirs) {
            std::vector<fs::path> files;
            for (const auto& entry : fs::directory_iterator(dir)) {
                if (!entry.is_regular_file())
                    continue;
                std::string ext = entry.path().extension().string();
                std::transform(ext.begin(), ext.end(), ext.begin(),
                               [](unsigned char ch) { return std::tolower(ch); });
                if (ext == ".off" || ext == ".obj")
                    files.push_back(entry.path());
            }
            std::sort(files.begin(), files.end());
            for (const auto& f : files)
                entries.emplace_back(f.string(), dir.filename().string());
        }
    } else {
        std::ifstream in(path);
        if (!in)
            throw Error("cannot open manifest: " + path);
        const fs::path base = fs::path(path).parent_path();
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos)
                line.erase(hash);
            const auto strip = [](std::string s) {
                const auto a = s.find_first_not_of(" \t\r");
                const auto b = s.find_last_not_of(" \t\r");
                return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
            };
            if (strip(line).empty())
                continue;
            const auto comma = line.rfind(',');
            if (comma == std::string::npos)
                throw Error(path + " line " + std::to_string(lineno) +
                            ": expected `path,class`");
            std::string mesh_path = strip(line.substr(0, comma));
            const std::string cls = strip(line.substr(comma + 1));
            if (mesh_path.empty() || cls.empty())
                throw Error(path + " line " + std::to_string(lineno) +
                            ": empty path or class");
            fs::path resolved = mesh_path;
            if (resolved.is_relative())
                resolved = base / resolved;
            entries.emplace_back(resolved.string(), cls);
        }
    }

    if (entries.empty())
        throw Error("manifest is empty: " + path);

    DatasetManifest manifest;
    std::set<std::string> classes;
    for (const auto& [p, cls] : entries)
        classes.insert(cls);
    manifest.class_names.assign(classes.begin(), classes.end());
    if (manifest.class_names.size() < 2)
        throw Error("manifest needs at least 2 classes, found " +
                    std::to_string(manifest.class_names.size()));

    std::vector<std::string> missing;
    for (const auto& [p, cls] : entries) {
        if (!fs::exists(p))
            missing.push_back(p);
        manifest.paths.push_back(p);
        const auto it =
            std::lower_bound(manifest.class_names.begin(), manifest.class_names.end(), cls);
        manifest.labels.push_back(
            static_cast<int>(it - manifest.class_names.begin()) + 1);
    }
    if (!missing.empty()) {
        std::string msg = "manifest lists missing files:";
        for (const auto& p : missing)
            msg += "\n  " + p;
        throw Error(msg);
    }
    return manifest;
}

// ---------- timers ----------

void save_timers(const std::string& out_dir, const RunTimers& timers)
{
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "timings.json");
    out << json{{"describe_seconds", timers.describe_seconds},
                {"vocab_seconds", timers.vocab_seconds},
                {"encode_seconds", timers.encode_seconds},
                {"evaluate_seconds", timers.evaluate_seconds},
                {"eigensolve_count", timers.eigensolve_count}}
               .dump(2)
        << "\n";
}

RunTimers load_timers(const std::string& out_dir)
{
    RunTimers timers;
    std::ifstream in(fs::path(out_dir) / "timings.json");
    if (!in)
        return timers;
    try {
        json j;
        in >> j;
        timers.describe_seconds = j.value("describe_seconds", 0.0);
        timers.vocab_seconds = j.value("vocab_seconds", 0.0);
        timers.encode_seconds = j.value("encode_seconds", 0.0);
        timers.evaluate_seconds = j.value("evaluate_seconds", 0.0);
        timers.eigensolve_count = j.value("eigensolve_count", 0);
    } catch (const json::exception&) {
        return RunTimers{};
    }
    return timers;
}

// ---------- descriptor store ----------

std::uint64_t DescriptorStore::content_hash(const ExperimentConfig& config) const
{
    std::uint64_t state = mix(14695981039346656037ull,
                              static_cast<std::uint64_t>(config.q));
    state = mix(state, static_cast<std::uint64_t>(config.resolution));
    state = mix(state, static_cast<std::uint64_t>(static_cast<int>(config.kind)));
    for (const auto& shape : shapes) {
        if (!shape.error.empty())
            continue;
        state = mix(state, shape.content_hash);
        state = mix(state, static_cast<std::uint64_t>(shape.label));
    }
    return state;
}

std::vector<int> DescriptorStore::successful() const
{
    std::vector<int> idx;
    for (std::size_t i = 0; i < shapes.size(); ++i)
        if (shapes[i].error.empty())
            idx.push_back(static_cast<int>(i));
    return idx;
}

int DescriptorStore::failure_count() const
{
    return static_cast<int>(shapes.size()) - static_cast<int>(successful().size());
}

// ---------- describe ----------

DescriptorStore run_describe(const ExperimentConfig& config,
                             const DatasetManifest& manifest, RunTimers& timers)
{
    const double start = now_seconds();
    const fs::path cache(resolved_cache_dir(config));
    fs::create_directories(cache);
    const int threads = resolve_thread_count(config.threads);
    const int p = sgws_dimension(config.resolution);

    DescriptorStore store;
    store.class_names = manifest.class_names;
    store.shapes.resize(manifest.paths.size());
    std::atomic<int> eigensolves{0};

    parallel_for(static_cast<int>(manifest.paths.size()), threads, [&](int i) {
        ShapeFeatures& shape = store.shapes[i];
        shape.path = manifest.paths[i];
        shape.label = manifest.labels[i];
        try {
            shape.content_hash = hash_file(shape.path);
            const Mesh mesh = load_mesh_file(shape.path);
            const int m = mesh.vertex_count();
            const int q_eff = std::min(config.q, m - 1);
            shape.total_area = vertex_areas(mesh).total_area;

            std::optional<EigenBasis> basis;
            const fs::path eig_path = eig_cache_path(cache, shape.content_hash, q_eff);
            if (fs::exists(eig_path)) {
                try {
                    EigenBasis cached = load_eigenbasis(eig_path.string());
                    if (cached.eigenfunctions.rows() == m && cached.count() == q_eff)
                        basis = std::move(cached);
                } catch (const std::exception&) {
                    // unreadable cache entry: recompute below
                }
            }
            const auto ensure_basis = [&] {
                if (basis)
                    return;
                basis = solve_eigs(assemble(mesh), q_eff);
                ++eigensolves;
                save_eigenbasis(eig_path.string(), *basis);
            };

            if (kind_uses_bof(config.kind)) {
                const fs::path local_path = local_cache_path(
                    cache, shape.content_hash, q_eff, config.resolution, config.kind);
                bool have_local = false;
                if (fs::exists(local_path)) {
                    try {
                        Eigen::MatrixXd cached = load_matrix_cache(local_path.string());
                        if (cached.rows() == p && cached.cols() == m) {
                            shape.local = std::move(cached);
                            have_local = true;
                        }
                    } catch (const std::exception&) {
                    }
                }
                if (!have_local) {
                    ensure_basis();
                    if (config.kind == DescriptorKind::SgwcBof)
                        shape.local = sgws_matrix(*basis, config.resolution).values;
                    else
                        shape.local = hks(*basis, default_hks_scales(*basis, p)).values;
                    save_matrix_cache(local_path.string(), shape.local);
                }
            }
            ensure_basis();
            shape.eigenvalues = basis->eigenvalues;
        } catch (const std::exception& e) {
            shape.error = e.what();
        }
    });

    for (const auto& shape : store.shapes)
        if (shape.error.empty()) {
            store.bank_lambda_max = shape.eigenvalues[shape.eigenvalues.size() - 1];
            break;
        }

    timers.eigensolve_count += eigensolves.load();
    timers.describe_seconds += now_seconds() - start;
    return store;
}

// ---------- vocabulary ----------

Codebook run_vocab(const ExperimentConfig& config, const DescriptorStore& store,
                   RunTimers& timers, const std::vector<int>* shape_subset,
                   std::optional<std::uint64_t> seed_override)
{
    if (!kind_uses_bof(config.kind))
        throw Error("descriptor kind '" + kind_name(config.kind) +
                    "' has no vocabulary stage");
    const double start = now_seconds();
    const std::vector<int> all = store.successful();
    const std::vector<int>& used = shape_subset ? *shape_subset : all;
    if (used.empty())
        throw Error("no shapes available for vocabulary construction");

    Eigen::Index total = 0;
    const Eigen::Index p = store.shapes[used.front()].local.rows();
    for (int idx : used)
        total += store.shapes[idx].local.cols();
    if (total < config.vocab_size)
        throw Error("vocabulary size k=" + std::to_string(config.vocab_size) +
                    " exceeds the " + std::to_string(total) +
                    " available descriptors");

    Eigen::MatrixXd concat(p, total);
    Eigen::Index at = 0;
    for (int idx : used) {
        const auto& local = store.shapes[idx].local;
        concat.middleCols(at, local.cols()) = local;
        at += local.cols();
    }

    const std::uint64_t seed = seed_override.value_or(config.seed);
    Codebook cb = kmeans(concat, config.vocab_size, seed);
    cb.training_hash = mix(mix(store.content_hash(config),
                               static_cast<std::uint64_t>(config.vocab_size)),
                           seed);
    timers.vocab_seconds += now_seconds() - start;
    return cb;
}

// ---------- encode ----------

LabeledDataset run_encode(const ExperimentConfig& config, DescriptorStore& store,
                          const Codebook* codebook, RunTimers& timers)
{
    const double start = now_seconds();
    const fs::path cache(resolved_cache_dir(config));
    fs::create_directories(cache);
    const int threads = resolve_thread_count(config.threads);
    const bool bof = kind_uses_bof(config.kind);
    if (bof && codebook == nullptr)
        throw Error("encoding a bag-of-features kind requires a codebook");

    const std::vector<int> used = store.successful();
    const int d = bof ? codebook->k() * codebook->k() : global_vector_length(config.kind);
    Eigen::MatrixXd columns(d, used.size());
    std::vector<std::string> errors(used.size());

    parallel_for(static_cast<int>(used.size()), threads, [&](int slot) {
        ShapeFeatures& shape = store.shapes[used[slot]];
        try {
            if (bof) {
                const CodeMatrix codes = soft_assign(shape.local, *codebook);
                GeodesicMatrix geo;
                bool have_geo = false;
                const fs::path geo_path = geo_cache_path(cache, shape.content_hash);
                if (fs::exists(geo_path)) {
                    try {
                        geo = load_geodesics(geo_path.string());
                        have_geo = geo.d.rows() == shape.local.cols();
                    } catch (const std::exception&) {
                    }
                }
                if (!have_geo) {
                    geo = geodesic_matrix(load_mesh_file(shape.path), 1);
                    save_geodesics(geo_path.string(), geo);
                }
                const GlobalDescriptor desc =
                    sgwc_bof(codes, geodesic_kernel(geo, config.epsilon), config.epsilon);
                columns.col(slot) = desc.x;
            } else {
                EigenBasis basis;
                basis.eigenvalues = shape.eigenvalues;
                switch (config.kind) {
                case DescriptorKind::ShapeDna:
                    columns.col(slot) = shape_dna(basis, kShapeDnaLength).values;
                    break;
                case DescriptorKind::CShapeDna:
                    columns.col(slot) =
                        cshape_dna(basis, shape.total_area, kCShapeDnaLength).values;
                    break;
                case DescriptorKind::GpsEmbedding:
                    columns.col(slot) =
                        gps_embedding(basis, shape.total_area, kGpsLength).values;
                    break;
                default:
                    throw Error("unreachable descriptor kind");
                }
            }
        } catch (const std::exception& e) {
            errors[slot] = e.what();
        }
    });

    LabeledDataset data;
    data.class_names = store.class_names;
    std::vector<int> ok_slots;
    for (std::size_t slot = 0; slot < used.size(); ++slot) {
        if (errors[slot].empty())
            ok_slots.push_back(static_cast<int>(slot));
        else
            store.shapes[used[slot]].error = errors[slot];
    }
    data.X.resize(d, ok_slots.size());
    for (std::size_t c = 0; c < ok_slots.size(); ++c) {
        data.X.col(c) = columns.col(ok_slots[c]);
        data.y.push_back(store.shapes[used[ok_slots[c]]].label);
    }
    timers.encode_seconds += now_seconds() - start;
    return data;
}

// ---------- dataset persistence ----------

void save_dataset(const std::string& path, const LabeledDataset& data,
                  std::uint64_t params_hash)
{
    atomic_file_write(path, [&](BinaryWriter& w) {
        w.header("SGWCDST\0", 1);
        w.u64(params_hash);
        w.u32(static_cast<std::uint32_t>(data.class_count()));
        w.u64(static_cast<std::uint64_t>(data.X.rows()));
        w.u64(static_cast<std::uint64_t>(data.X.cols()));
        for (int label : data.y)
            w.u32(static_cast<std::uint32_t>(label));
        w.matrix(data.X);
        for (const auto& name : data.class_names)
            w.string(name);
    });
}

LabeledDataset load_dataset(const std::string& path, std::uint64_t* params_hash)
{
    BinaryReader r(path);
    r.header("SGWCDST\0");
    const std::uint64_t hash = r.u64();
    if (params_hash)
        *params_hash = hash;
    const auto k_cls = static_cast<int>(r.u32());
    const auto d = static_cast<Eigen::Index>(r.u64());
    const auto n = static_cast<Eigen::Index>(r.u64());
    LabeledDataset data;
    data.y.reserve(n);
    for (Eigen::Index i = 0; i < n; ++i)
        data.y.push_back(static_cast<int>(r.u32()));
    data.X = r.matrix(d, n);
    data.class_names.reserve(k_cls);
    for (int c = 0; c < k_cls; ++c)
        data.class_names.push_back(r.string());
    return data;
}

// ---------- evaluation ----------

namespace {

double cv_fold_accuracy(const LabeledDataset& train, double c_value,
                        std::uint64_t seed, int threads)
{
    // stratified round-robin folds after a seeded shuffle
    const int k_cls = train.class_count();
    std::vector<std::vector<int>> by_class(k_cls);
    for (int i = 0; i < train.size(); ++i)
        by_class[train.y[i] - 1].push_back(i);
    std::size_t smallest = train.y.size();
    for (const auto& members : by_class)
        if (!members.empty())
            smallest = std::min(smallest, members.size());
    const int folds = static_cast<int>(std::min<std::size_t>(5, smallest));
    if (folds < 2)
        return -1.0;  // cannot cross-validate; caller falls back

    std::mt19937_64 rng(seed ^ 0xc5ull);
    std::vector<int> fold_of(train.size(), 0);
    for (auto& members : by_class) {
        for (std::size_t i = members.size(); i > 1; --i)
            std::swap(members[i - 1], members[uniform_index(rng, i)]);
        for (std::size_t i = 0; i < members.size(); ++i)
            fold_of[members[i]] = static_cast<int>(i % folds);
    }

    std::int64_t correct = 0, total = 0;
    for (int f = 0; f < folds; ++f) {
        std::vector<int> fit, held;
        for (int i = 0; i < train.size(); ++i)
            (fold_of[i] == f ? held : fit).push_back(i);
        const LabeledDataset fit_set = dataset_subset(train, fit);
        const LabeledDataset held_set = dataset_subset(train, held);
        const OvaSvmModel model = train_ova_svm(fit_set, c_value, seed, threads);
        for (int i = 0; i < held_set.size(); ++i) {
            correct += predict(model, held_set.X.col(i)) == held_set.y[i];
            ++total;
        }
    }
    return total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : -1.0;
}

}  // namespace

double select_c(const ExperimentConfig& config, const LabeledDataset& data,
                std::uint64_t seed)
{
    if (config.c_grid.size() == 1)
        return config.c_grid.front();
    const int threads = resolve_thread_count(config.threads);
    double best_c = config.c_grid.front();
    double best_acc = -2.0;
    for (double c_value : config.c_grid) {
        const double acc = cv_fold_accuracy(data, c_value, seed, threads);
        if (acc < 0.0)
            return config.c_grid.front();  // classes too small to fold
        if (acc > best_acc) {
            best_acc = acc;
            best_c = c_value;
        }
    }
    return best_c;
}

RunReport run_evaluate(const ExperimentConfig& config, DescriptorStore& store,
                       const LabeledDataset& dataset, RunTimers& timers)
{
    const double start = now_seconds();
    const int threads = resolve_thread_count(config.threads);
    if (dataset.size() == 0)
        throw Error("evaluation needs a nonempty dataset");

    RunReport report;
    report.class_names = dataset.class_names;
    const int k_cls = dataset.class_count();
    report.aggregate.counts.setZero(k_cls, k_cls);

    // map dataset columns back to store shapes for per-run vocabularies
    const std::vector<int> shape_of_column = store.successful();
    const bool per_run = config.vocab_per_run && kind_uses_bof(config.kind);
    if (per_run && shape_of_column.size() != static_cast<std::size_t>(dataset.size()))
        throw Error("dataset and descriptor store are out of step");

    for (int rep = 1; rep <= config.repetitions; ++rep) {
        const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(rep);
        LabeledDataset rebuilt;
        const LabeledDataset* active = &dataset;
        if (per_run) {
            const auto [train_idx, test_idx] = stratified_split_indices(
                dataset.y, dataset.class_names, config.test_fraction, seed);
            std::vector<int> train_shapes;
            for (int col : train_idx)
                train_shapes.push_back(shape_of_column[col]);
            const Codebook cb = run_vocab(config, store, timers, &train_shapes, seed);
            rebuilt = run_encode(config, store, &cb, timers);
            if (rebuilt.size() != dataset.size())
                throw Error("per-run encoding dropped shapes; cannot evaluate");
            active = &rebuilt;
        }

        const auto [train, test] =
            stratified_split(*active, config.test_fraction, seed);
        const double c_value = select_c(config, train, seed);
        const OvaSvmModel model = train_ova_svm(train, c_value, seed, threads);
        std::vector<int> predicted;
        predicted.reserve(test.size());
        for (int i = 0; i < test.size(); ++i)
            predicted.push_back(predict(model, test.X.col(i)));
        const ConfusionMatrix cm = confusion_matrix(test.y, predicted, k_cls);
        report.aggregate.counts += cm.counts;
        report.accuracies.push_back(accuracy(cm));
        report.chosen_c.push_back(c_value);
    }

    report.mean_accuracy = 0.0;
    report.min_accuracy = report.accuracies.front();
    report.max_accuracy = report.accuracies.front();
    for (double a : report.accuracies) {
        report.mean_accuracy += a;
        report.min_accuracy = std::min(report.min_accuracy, a);
        report.max_accuracy = std::max(report.max_accuracy, a);
    }
    report.mean_accuracy /= static_cast<double>(report.accuracies.size());

    for (const auto& shape : store.shapes)
        if (!shape.error.empty())
            report.failures.push_back(shape.path + ": " + shape.error);

    timers.evaluate_seconds += now_seconds() - start;
    report.timers = timers;
    return report;
}

// ---------- report artifacts ----------

void write_report(const ExperimentConfig& config, const RunReport& report)
{
    fs::create_directories(config.out_dir);
    const fs::path out(config.out_dir);

    json confusion = json::array();
    for (Eigen::Index r = 0; r < report.aggregate.counts.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < report.aggregate.counts.cols(); ++c)
            row.push_back(report.aggregate.counts(r, c));
        confusion.push_back(row);
    }
    const json j{{"config", config_json(config)},
                 {"accuracies", report.accuracies},
                 {"chosen_C", report.chosen_c},
                 {"mean_accuracy", report.mean_accuracy},
                 {"min_accuracy", report.min_accuracy},
                 {"max_accuracy", report.max_accuracy},
                 {"class_names", report.class_names},
                 {"confusion", confusion},
                 {"failures", report.failures},
                 {"timers",
                  {{"describe_seconds", report.timers.describe_seconds},
                   {"vocab_seconds", report.timers.vocab_seconds},
                   {"encode_seconds", report.timers.encode_seconds},
                   {"evaluate_seconds", report.timers.evaluate_seconds},
                   {"eigensolve_count", report.timers.eigensolve_count}}}};
    std::ofstream(out / "report.json") << j.dump(2) << "\n";

    std::ofstream confusion_csv(out / "confusion.csv");
    confusion_csv << "actual\\predicted";
    for (const auto& name : report.class_names)
        confusion_csv << ',' << name;
    confusion_csv << "\n";
    for (Eigen::Index r = 0; r < report.aggregate.counts.rows(); ++r) {
        confusion_csv << report.class_names[r];
        for (Eigen::Index c = 0; c < report.aggregate.counts.cols(); ++c)
            confusion_csv << ',' << report.aggregate.counts(r, c);
        confusion_csv << "\n";
    }

    std::ofstream accuracy_csv(out / "accuracy.csv");
    accuracy_csv << "repetition,accuracy,C\n";
    for (std::size_t i = 0; i < report.accuracies.size(); ++i)
        accuracy_csv << i + 1 << ',' << report.accuracies[i] << ','
                     << report.chosen_c[i] << "\n";
}

std::string report_summary(const std::string& report_json_path)
{
    std::ifstream in(report_json_path);
    if (!in)
        throw Error("cannot open report: " + report_json_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error("unreadable report " + report_json_path + ": " + e.what());
    }
    std::ostringstream out;
    out << "descriptor: " << j["config"]["kind"].get<std::string>() << "\n";
    out << "repetitions: " << j["accuracies"].size() << "\n";
    out << "accuracy mean/min/max: " << j["mean_accuracy"].get<double>() << " / "
        << j["min_accuracy"].get<double>() << " / " << j["max_accuracy"].get<double>()
        << "\n";
    out << "stage seconds (describe/vocab/encode/evaluate): "
        << j["timers"]["describe_seconds"].get<double>() << " / "
        << j["timers"]["vocab_seconds"].get<double>() << " / "
        << j["timers"]["encode_seconds"].get<double>() << " / "
        << j["timers"]["evaluate_seconds"].get<double>() << "\n";
    const auto& failures = j["failures"];
    out << "failures: " << failures.size() << "\n";
    for (const auto& f : failures)
        out << "  " << f.get<std::string>() << "\n";
    return out.str();
}

// ---------- cached orchestration ----------

PipelineContext make_context(const ExperimentConfig& config)
{
    validate_config(config);
    if (config.manifest.empty())
        throw Error("no dataset manifest given");
    PipelineContext ctx;
    ctx.config = config;
    ctx.manifest = load_manifest(config.manifest);
    fs::create_directories(config.out_dir);
    ctx.timers = load_timers(config.out_dir);
    return ctx;
}

void ensure_described(PipelineContext& ctx)
{
    if (ctx.described)
        return;
    ctx.timers.describe_seconds = 0.0;
    ctx.timers.eigensolve_count = 0;
    ctx.store = run_describe(ctx.config, ctx.manifest, ctx.timers);
    if (ctx.store.successful().empty()) {
        std::string msg = "all meshes failed to describe";
        for (const auto& shape : ctx.store.shapes) {
            msg += "\n  " + shape.path + ": " + shape.error;
            break;
        }
        throw Error(msg);
    }
    if (ctx.config.kind == DescriptorKind::SgwcBof) {
        const KernelBank bank =
            build_kernel_bank(ctx.store.bank_lambda_max, ctx.config.resolution);
        std::ofstream frame(fs::path(ctx.config.out_dir) / "frame_bounds.csv");
        write_frame_csv(frame, bank, ctx.config.resolution, ctx.store.bank_lambda_max);
    }
    ctx.described = true;
}

void ensure_codebook(PipelineContext& ctx)
{
    if (!kind_uses_bof(ctx.config.kind) || ctx.codebook)
        return;
    ensure_described(ctx);
    const std::uint64_t expected =
        mix(mix(ctx.store.content_hash(ctx.config),
                static_cast<std::uint64_t>(ctx.config.vocab_size)),
            ctx.config.seed);
    const fs::path path = fs::path(ctx.config.out_dir) / "codebook.bin";
    if (fs::exists(path)) {
        try {
            Codebook cached = load_codebook(path.string());
            if (cached.training_hash == expected) {
                ctx.codebook = std::move(cached);
                return;
            }
        } catch (const std::exception&) {
        }
    }
    ctx.timers.vocab_seconds = 0.0;
    ctx.codebook = run_vocab(ctx.config, ctx.store, ctx.timers);
    save_codebook(path.string(), *ctx.codebook);
}

void ensure_dataset(PipelineContext& ctx)
{
    if (ctx.encoded)
        return;
    ensure_described(ctx);
    ensure_codebook(ctx);

    std::uint64_t params = ctx.store.content_hash(ctx.config);
    if (ctx.codebook)
        params = mix(params, ctx.codebook->training_hash);
    params = mix(params, ctx.config.epsilon);

    const fs::path path = fs::path(ctx.config.out_dir) / "dataset.bin";
    if (fs::exists(path)) {
        try {
            std::uint64_t stored = 0;
            LabeledDataset cached = load_dataset(path.string(), &stored);
            if (stored == params && cached.size() > 0) {
                ctx.dataset = std::move(cached);
                ctx.encoded = true;
                return;
            }
        } catch (const std::exception&) {
        }
    }

    ctx.timers.encode_seconds = 0.0;
    ctx.dataset = run_encode(ctx.config, ctx.store,
                             ctx.codebook ? &*ctx.codebook : nullptr, ctx.timers);
    if (ctx.dataset.size() == 0)
        throw Error("all meshes failed during encoding");
    save_dataset(path.string(), ctx.dataset, params);
    ctx.encoded = true;
}

RunReport run_experiment(const ExperimentConfig& config)
{
    PipelineContext ctx = make_context(config);
    ensure_dataset(ctx);
    ctx.timers.evaluate_seconds = 0.0;
    RunReport report = run_evaluate(ctx.config, ctx.store, ctx.dataset, ctx.timers);
    write_report(ctx.config, report);
    save_timers(ctx.config.out_dir, ctx.timers);
    return report;
}

std::vector<std::string> run_sweep(const ExperimentConfig& base,
                                   const std::vector<double>& epsilon_grid,
                                   const std::vector<int>& k_grid)
{
    const std::vector<double> eps =
        epsilon_grid.empty() ? std::vector<double>{base.epsilon} : epsilon_grid;
    const std::vector<int> ks =
        k_grid.empty() ? std::vector<int>{base.vocab_size} : k_grid;

    std::vector<std::string> rows;
    rows.push_back("epsilon,k,mean_accuracy,min_accuracy,max_accuracy");
    for (double e : eps) {
        for (int k : ks) {
            ExperimentConfig cell = base;
            cell.epsilon = e;
            cell.vocab_size = k;
            cell.cache_dir = resolved_cache_dir(base);  // shared across cells
            std::ostringstream name;
            name << "eps" << e << "-k" << k;
            cell.out_dir = (fs::path(base.out_dir) / "sweep" / name.str()).string();
            const RunReport report = run_experiment(cell);
            std::ostringstream row;
            row << e << ',' << k << ',' << report.mean_accuracy << ','
                << report.min_accuracy << ',' << report.max_accuracy;
            rows.push_back(row.str());
        }
    }
    fs::create_directories(fs::path(base.out_dir) / "sweep");
    std::ofstream csv(fs::path(base.out_dir) / "sweep" / "sweep.csv");
    for (const auto& row : rows)
        csv << row << "\n";
    return rows;
}

}  // namespace sgwc
