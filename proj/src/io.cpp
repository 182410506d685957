#include "lpbf/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lpbf/errors.hpp"

namespace lpbf::io {

using json = nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << text;
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw NotFoundError("missing artifact: " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

std::uint64_t to_little(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        return __builtin_bswap64(v);
    }
    return v;
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && *b == ' ') ++b;
    const auto r = std::from_chars(b, e, v);
    if (r.ec != std::errc()) {
        throw std::runtime_error("cannot parse number '" + s + "'");
    }
    return v;
}

int parse_int(const std::string& s) {
    int v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc()) {
        throw std::runtime_error("cannot parse integer '" + s + "'");
    }
    return v;
}

json read_json(const fs::path& path) {
    return json::parse(read_text(path));
}

}  // namespace

void write_f64(const fs::path& path, std::span<const double> values) {
    std::string bytes(values.size() * 8, '\0');
    for (std::size_t k = 0; k < values.size(); ++k) {
        const std::uint64_t v = to_little(std::bit_cast<std::uint64_t>(values[k]));
        std::memcpy(bytes.data() + 8 * k, &v, 8);
    }
    write_text(path, bytes);
}

std::vector<double> read_f64(const fs::path& path) {
    const std::string bytes = read_text(path);
    if (bytes.size() % 8 != 0) {
        throw std::runtime_error("truncated float64 blob: " + path.string());
    }
    std::vector<double> out(bytes.size() / 8);
    for (std::size_t k = 0; k < out.size(); ++k) {
        std::uint64_t v;
        std::memcpy(&v, bytes.data() + 8 * k, 8);
        out[k] = std::bit_cast<double>(to_little(v));
    }
    return out;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::istringstream in(read_text(path));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) {
            cells.push_back(cell);
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

std::string provenance_line(const std::string& config_hash) {
    return "# config_hash: " + config_hash + "\n";
}

void save_run(const fs::path& dir, const RunRecord& run, const std::string& config_hash) {
    fs::create_directories(dir / "snapshots");
    json manifest;
    manifest["config_hash"] = config_hash;
    manifest["grid"] = {{"nx", run.grid.nx}, {"ny", run.grid.ny}, {"x_range", {-1.0, 1.0}},
                        {"y_range", {-1.0, 1.0}}};
    manifest["material"] = {{"kappa", run.material.kappa},
                            {"c_heat", run.material.c_heat},
                            {"rho", run.material.rho}};
    manifest["laser"] = {{"power", run.laser.power}, {"omega", run.laser.omega}};
    manifest["theta0"] = run.theta0;
    manifest["initial_temperature"] = run.initial_temperature;
    manifest["tau"] = run.tau;
    manifest["substeps"] = run.substeps;
    json stops = json::array();
    for (const Point& p : run.stops) {
        stops.push_back({p.x, p.y});
    }
    manifest["stops"] = stops;
    json traj = json::array();
    for (int s : run.trajectory) {
        traj.push_back(s + 1);
    }
    manifest["trajectory"] = traj;
    manifest["snapshot_format"] = "little-endian float64, row-major (y outer, x inner), nx*ny values";
    manifest["stop_index_base"] = 1;
    manifest["moves"] = run.snapshots.size();

    std::ostringstream index;
    index << provenance_line(config_hash) << "move,stop_index,t_start,t_end\n";
    for (const MoveSnapshot& s : run.snapshots) {
        char name[32];
        std::snprintf(name, sizeof(name), "move_%04d.bin", s.move + 1);
        write_f64(dir / "snapshots" / name, s.field.values());
        index << s.move + 1 << ',' << s.stop_index + 1 << ',' << format_double(s.t_start) << ','
              << format_double(s.t_end) << '\n';
    }
    write_text(dir / "index.csv", index.str());
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

RunRecord load_run(const fs::path& dir) {
    if (!fs::exists(dir / "manifest.json")) {
        throw NotFoundError("missing run: " + (dir / "manifest.json").string());
    }
    const json m = read_json(dir / "manifest.json");
    RunRecord run;
    run.grid.nx = m.at("grid").at("nx").get<int>();
    run.grid.ny = m.at("grid").at("ny").get<int>();
    run.material.kappa = m.at("material").at("kappa").get<double>();
    run.material.c_heat = m.at("material").at("c_heat").get<double>();
    run.material.rho = m.at("material").at("rho").get<double>();
    run.laser.power = m.at("laser").at("power").get<double>();
    run.laser.omega = m.at("laser").at("omega").get<double>();
    run.theta0 = m.at("theta0").get<double>();
    run.initial_temperature = m.at("initial_temperature").get<double>();
    run.tau = m.at("tau").get<double>();
    run.substeps = m.at("substeps").get<int>();
    for (const auto& p : m.at("stops")) {
        run.stops.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
    for (const auto& s : m.at("trajectory")) {
        run.trajectory.push_back(s.get<int>() - 1);
    }
    const auto rows = read_csv(dir / "index.csv");
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != 4) {
            throw std::runtime_error("malformed run index row in " + dir.string());
        }
        MoveSnapshot s;
        s.move = parse_int(row[0]) - 1;
        s.stop_index = parse_int(row[1]) - 1;
        s.t_start = parse_double(row[2]);
        s.t_end = parse_double(row[3]);
        char name[32];
        std::snprintf(name, sizeof(name), "move_%04d.bin", s.move + 1);
        TemperatureField f(run.grid, run.theta0, run.theta0);
        f.values() = read_f64(dir / "snapshots" / name);
        if (f.values().size() != run.grid.size()) {
            throw std::runtime_error("snapshot size mismatch in " + dir.string());
        }
        f.set_time(s.t_end);
        s.field = std::move(f);
        run.snapshots.push_back(std::move(s));
    }
    return run;
}

void save_penalty_matrix(const fs::path& path, const PenaltyMatrix& c,
                         const std::string& config_hash) {
    std::ostringstream os;
    os << provenance_line(config_hash);
    if (!c.provenance().empty()) {
        os << "# source: " << c.provenance() << '\n';
    }
    os << c.size() << '\n';
    for (int i = 0; i < c.size(); ++i) {
        for (int j = 0; j < c.size(); ++j) {
            os << (j ? "," : "") << format_double(c(i, j));
        }
        os << '\n';
    }
    write_text(path, os.str());
}

PenaltyMatrix load_penalty_matrix(const fs::path& path) {
    const auto rows = read_csv(path);
    if (rows.empty() || rows.front().size() != 1) {
        throw std::runtime_error("penalty matrix CSV lacks its size header");
    }
    const int n = parse_int(rows.front().front());
    if (static_cast<int>(rows.size()) != n + 1) {
        throw std::runtime_error("penalty matrix CSV row count mismatch");
    }
    std::vector<double> c;
    c.reserve(static_cast<std::size_t>(n) * n);
    for (int r = 1; r <= n; ++r) {
        if (static_cast<int>(rows[r].size()) != n) {
            throw std::runtime_error("penalty matrix CSV column count mismatch");
        }
        for (const auto& cell : rows[r]) {
            c.push_back(parse_double(cell));
        }
    }
    return PenaltyMatrix(n, std::move(c), path.string());
}

void save_tour(const fs::path& path, const Tour& tour, const std::string& config_hash) {
    std::ostringstream os;
    os << provenance_line(config_hash) << "stop\n";
    for (int s : tour) {
        os << s + 1 << '\n';
    }
    write_text(path, os.str());
}

Tour load_tour(const fs::path& path) {
    const auto rows = read_csv(path);
    Tour tour;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].empty()) continue;
        if (r == 0 && rows[r][0] == "stop") continue;
        tour.push_back(parse_int(rows[r][0]) - 1);
    }
    return tour;
}

void save_feature_table(const fs::path& path, std::span<const double> values, int num_maps,
                        const std::string& config_hash) {
    if (values.size() != static_cast<std::size_t>(num_maps) * kSubdomains) {
        throw std::invalid_argument("save_feature_table: value count mismatch");
    }
    std::ostringstream os;
    os << provenance_line(config_hash) << "move_index";
    for (int l = 1; l <= kSubdomains; ++l) {
        os << ",subdomain_" << l;
    }
    os << '\n';
    for (int k = 0; k < num_maps; ++k) {
        os << k + 1;
        for (int l = 0; l < kSubdomains; ++l) {
            os << ',' << format_double(values[static_cast<std::size_t>(k) * kSubdomains + l]);
        }
        os << '\n';
    }
    write_text(path, os.str());
}

std::vector<double> load_feature_table(const fs::path& path, int* num_maps) {
    const auto rows = read_csv(path);
    std::vector<double> values;
    int maps = 0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != kSubdomains + 1) {
            throw std::runtime_error("feature table row has wrong column count");
        }
        for (int l = 1; l <= kSubdomains; ++l) {
            values.push_back(parse_double(rows[r][l]));
        }
        ++maps;
    }
    if (num_maps) *num_maps = maps;
    return values;
}

void save_model(const fs::path& dir, const LstmModel& model, const TrainConfig& config,
                const std::string& config_hash) {
    fs::create_directories(dir);
    const LstmParams& p = model.params();
    const auto names = p.tensor_names();
    const auto tensors = p.tensors();
    json m;
    m["config_hash"] = config_hash;
    m["hidden"] = model.hidden();
    m["layers"] = model.num_layers();
    m["input_width"] = p.layers.front().q_in;
    m["output_width"] = 1;
    m["blob_format"] = "little-endian float64, column-major";
    json order = json::array();
    for (std::size_t k = 0; k < tensors.size(); ++k) {
        order.push_back({{"name", names[k]},
                         {"file", names[k] + ".bin"},
                         {"rows", tensors[k]->rows()},
                         {"cols", tensors[k]->cols()}});
        write_f64(dir / (names[k] + ".bin"),
                  std::span<const double>(tensors[k]->data(), tensors[k]->size()));
    }
    m["tensors"] = order;
    m["normalization"] = {{"scheme", to_string(model.norm().scheme)},
                          {"shift", model.norm().shift},
                          {"scale", model.norm().scale},
                          {"degenerate", model.norm().degenerate}};
    m["train_config"] = {{"batch", config.batch},
                         {"epochs", config.epochs},
                         {"learning_rate", config.learning_rate},
                         {"lr_drop_factor", config.lr_drop_factor},
                         {"lr_drop_period", config.lr_drop_period},
                         {"dropout", config.dropout},
                         {"beta1", config.beta1},
                         {"beta2", config.beta2},
                         {"epsilon", config.epsilon},
                         {"gradient_threshold", config.gradient_threshold},
                         {"seed", config.seed}};
    write_text(dir / "manifest.json", m.dump(2) + "\n");
}

LstmModel load_model(const fs::path& dir) {
    if (!fs::exists(dir / "manifest.json")) {
        throw NotFoundError("missing model: " + (dir / "manifest.json").string());
    }
    const json m = read_json(dir / "manifest.json");
    LstmParams p = LstmParams::zeros(m.at("input_width").get<int>(), m.at("hidden").get<int>(),
                                     m.at("layers").get<int>());
    const auto names = p.tensor_names();
    auto tensors = p.tensors();
    const auto& order = m.at("tensors");
    if (order.size() != tensors.size()) {
        throw std::runtime_error("model manifest tensor count mismatch");
    }
    for (std::size_t k = 0; k < tensors.size(); ++k) {
        if (order[k].at("name").get<std::string>() != names[k] ||
            order[k].at("rows").get<Eigen::Index>() != tensors[k]->rows() ||
            order[k].at("cols").get<Eigen::Index>() != tensors[k]->cols()) {
            throw std::runtime_error("model manifest tensor layout mismatch at " + names[k]);
        }
        const auto data = read_f64(dir / order[k].at("file").get<std::string>());
        if (static_cast<Eigen::Index>(data.size()) != tensors[k]->size()) {
            throw std::runtime_error("model blob size mismatch for " + names[k]);
        }
        std::copy(data.begin(), data.end(), tensors[k]->data());
    }
    NormStats norm;
    const auto& n = m.at("normalization");
    norm.scheme = norm_scheme_from_string(n.at("scheme").get<std::string>());
    norm.shift = n.at("shift").get<double>();
    norm.scale = n.at("scale").get<double>();
    norm.degenerate = n.at("degenerate").get<bool>();
    return LstmModel(std::move(p), norm);
}

}  // namespace lpbf::io
