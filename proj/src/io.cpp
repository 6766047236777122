#include "flowest/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace flowest {

namespace {

constexpr char kSnapMagicText[] = "flowsnap-text";
constexpr char kSnapMagicBin[] = "FLOWSNP\0";
constexpr char kRomMagicText[] = "flowrom-text";
constexpr char kRomMagicBin[] = "FLOWROM\0";

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// --- text tokenizer with line tracking -------------------------------------

class TextReader {
  public:
    TextReader(const std::string& path) : path_(path), in_(path) {
        if (!in_) throw IoError("cannot open '" + path + "' for reading");
    }

    // Next whitespace-separated token, skipping '#' comments to end of line.
    std::string next() {
        std::string tok;
        char c;
        while (in_.get(c)) {
            if (c == '#') {
                std::string rest;
                std::getline(in_, rest);
                ++line_;
                continue;
            }
            if (c == '\n') {
                ++line_;
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(c))) continue;
            tok.push_back(c);
            while (in_.get(c)) {
                if (std::isspace(static_cast<unsigned char>(c)) || c == '#') {
                    in_.unget();
                    break;
                }
                tok.push_back(c);
            }
            return tok;
        }
        fail("unexpected end of file");
        return {};
    }

    double next_double() {
        const std::string tok = next();
        try {
            std::size_t used = 0;
            const double v = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            fail("expected a number, got '" + tok + "'");
        }
        return 0;
    }

    long long next_int() {
        const std::string tok = next();
        try {
            std::size_t used = 0;
            const long long v = std::stoll(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            fail("expected an integer, got '" + tok + "'");
        }
        return 0;
    }

    bool at_eof() {
        char c;
        while (in_.get(c)) {
            if (c == '#') {
                std::string rest;
                std::getline(in_, rest);
                ++line_;
                continue;
            }
            if (c == '\n') {
                ++line_;
                continue;
            }
            if (!std::isspace(static_cast<unsigned char>(c))) {
                in_.unget();
                return false;
            }
        }
        return true;
    }

    [[noreturn]] void fail(const std::string& what) {
        throw IoError("parse error in '" + path_ + "' near line " + std::to_string(line_ + 1) +
                      ": " + what);
    }

  private:
    std::string path_;
    std::ifstream in_;
    std::size_t line_ = 0;
};

// --- binary helpers ---------------------------------------------------------

class BinReader {
  public:
    BinReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw IoError("cannot open '" + path + "' for reading");
    }

    void raw(void* dst, std::size_t bytes) {
        in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(bytes));
        if (static_cast<std::size_t>(in_.gcount()) != bytes)
            throw IoError("parse error in '" + path_ + "' at byte offset " +
                          std::to_string(offset_) + ": truncated file");
        offset_ += bytes;
    }

    std::int64_t i64() {
        std::int64_t v;
        raw(&v, sizeof v);
        return v;
    }

    void doubles(double* dst, std::size_t count) { raw(dst, count * sizeof(double)); }

    std::size_t offset() const { return offset_; }
    const std::string& path() const { return path_; }

  private:
    std::string path_;
    std::ifstream in_;
    std::size_t offset_ = 0;
};

class BinWriter {
  public:
    BinWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot open '" + path + "' for writing");
    }
    void raw(const void* src, std::size_t bytes) {
        out_.write(static_cast<const char*>(src), static_cast<std::streamsize>(bytes));
        if (!out_) throw IoError("write failure on '" + path_ + "'");
    }
    void i64(std::int64_t v) { raw(&v, sizeof v); }
    void doubles(const double* src, std::size_t count) { raw(src, count * sizeof(double)); }
    void close() {
        out_.close();
        if (!out_) throw IoError("write failure on '" + path_ + "'");
    }

  private:
    std::string path_;
    std::ofstream out_;
};

void write_field_text(std::ostream& os, const VectorField& f) {
    for (int c = 0; c < f.n_components(); ++c) {
        const VectorXd& v = f.component(c);
        for (Eigen::Index i = 0; i < v.size(); ++i)
            os << fmt_double(v[i]) << ((i + 1) % 8 == 0 || i + 1 == v.size() ? "\n" : " ");
    }
}

}  // namespace

FileFormat format_from_name(const std::string& name) {
    if (name == "text-table" || name == "text") return FileFormat::TextTable;
    if (name == "raw-binary" || name == "binary") return FileFormat::RawBinary;
    throw std::invalid_argument("unknown file format '" + name +
                                "' (expected text-table or raw-binary)");
}

std::string format_name(FileFormat f) {
    return f == FileFormat::TextTable ? "text-table" : "raw-binary";
}

void save_snapshots(const SnapshotSet& set, const std::string& path, FileFormat format,
                    bool with_reference, const std::vector<std::string>& header_comments) {
    const Grid& g = *set.grid();
    const int n_axes = g.n_axes();
    const int n_comp = n_axes;
    const int n_snap = set.n_snapshots();

    if (format == FileFormat::TextTable) {
        std::ofstream os(path);
        if (!os) throw IoError("cannot open '" + path + "' for writing");
        for (const auto& c : header_comments) os << "# " << c << "\n";
        os << kSnapMagicText << " 1 " << n_axes;
        for (int a = 0; a < n_axes; ++a) os << " " << g.dim(a);
        os << " " << n_comp << " " << n_snap << " " << (with_reference ? 1 : 0) << "\n";
        for (int a = 0; a < n_axes; ++a) {
            os << "# coords axis " << a << "\n";
            const auto& x = g.coords(a);
            for (std::size_t i = 0; i < x.size(); ++i)
                os << fmt_double(x[i]) << (i + 1 == x.size() ? "\n" : " ");
        }
        os << "# times\n";
        for (Eigen::Index i = 0; i < set.times().size(); ++i)
            os << fmt_double(set.times()[i]) << (i + 1 == set.times().size() ? "\n" : " ");
        if (with_reference) {
            os << "# reference field\n";
            write_field_text(os, set.reference());
        }
        for (int i = 0; i < n_snap; ++i) {
            os << "# field " << i << "\n";
            write_field_text(os, set.field(i));
        }
        os.close();
        if (!os) throw IoError("write failure on '" + path + "'");
        return;
    }

    BinWriter w(path);
    w.raw(kSnapMagicBin, 8);
    w.i64(1);
    w.i64(n_axes);
    for (int a = 0; a < n_axes; ++a) w.i64(g.dim(a));
    w.i64(n_comp);
    w.i64(n_snap);
    w.i64(with_reference ? 1 : 0);
    for (int a = 0; a < n_axes; ++a) w.doubles(g.coords(a).data(), g.coords(a).size());
    w.doubles(set.times().data(), static_cast<std::size_t>(set.times().size()));
    auto put_field = [&](const VectorField& f) {
        for (int c = 0; c < f.n_components(); ++c)
            w.doubles(f.component(c).data(), static_cast<std::size_t>(f.component(c).size()));
    };
    if (with_reference) put_field(set.reference());
    for (int i = 0; i < n_snap; ++i) put_field(set.field(i));
    w.close();
}

namespace {

SnapshotSet load_snapshots_text(const std::string& path) {
    TextReader r(path);
    const std::string magic = r.next();
    if (magic != kSnapMagicText) r.fail("bad magic '" + magic + "'");
    const long long version = r.next_int();
    if (version != 1) r.fail("unsupported version " + std::to_string(version));
    const long long n_axes = r.next_int();
    if (n_axes < 2 || n_axes > 3) r.fail("n_axes must be 2 or 3, got " + std::to_string(n_axes));
    std::vector<long long> dims(n_axes);
    for (auto& d : dims) {
        d = r.next_int();
        if (d < 2) r.fail("axis dim must be >= 2, got " + std::to_string(d));
    }
    const long long n_comp = r.next_int();
    if (n_comp != n_axes) r.fail("n_components must equal n_axes for velocity fields");
    const long long n_snap = r.next_int();
    if (n_snap < 2) r.fail("need at least 2 snapshots, got " + std::to_string(n_snap));
    const long long has_ref = r.next_int();
    if (has_ref != 0 && has_ref != 1) r.fail("has_reference flag must be 0 or 1");

    std::vector<std::vector<double>> coords(n_axes);
    for (long long a = 0; a < n_axes; ++a) {
        coords[a].resize(dims[a]);
        for (auto& x : coords[a]) x = r.next_double();
    }
    GridPtr grid;
    try {
        grid = std::make_shared<Grid>(std::move(coords));
    } catch (const std::invalid_argument& e) {
        r.fail(e.what());
    }

    VectorXd times(n_snap);
    for (long long i = 0; i < n_snap; ++i) times[i] = r.next_double();
    for (long long i = 1; i < n_snap; ++i)
        if (!(times[i] > times[i - 1])) r.fail("times not strictly increasing");

    auto read_field = [&]() {
        std::vector<VectorXd> comps(n_comp);
        for (auto& cmp : comps) {
            cmp.resize(static_cast<Eigen::Index>(grid->n_points()));
            for (Eigen::Index i = 0; i < cmp.size(); ++i) cmp[i] = r.next_double();
        }
        return VectorField(grid, std::move(comps));
    };

    std::optional<VectorField> reference;
    if (has_ref) reference = read_field();
    std::vector<VectorField> fields;
    fields.reserve(n_snap);
    for (long long i = 0; i < n_snap; ++i) fields.push_back(read_field());
    if (!r.at_eof()) r.fail("trailing data after last field");

    if (reference) return SnapshotSet(std::move(times), std::move(fields), std::move(*reference));
    return SnapshotSet(std::move(times), std::move(fields));
}

SnapshotSet load_snapshots_binary(const std::string& path) {
    BinReader r(path);
    char magic[8];
    r.raw(magic, 8);
    if (std::memcmp(magic, kSnapMagicBin, 8) != 0)
        throw IoError("parse error in '" + path + "' at byte offset 0: bad magic");
    const auto version = r.i64();
    if (version != 1)
        throw IoError("parse error in '" + path + "': unsupported version " +
                      std::to_string(version));
    const auto n_axes = r.i64();
    if (n_axes < 2 || n_axes > 3)
        throw IoError("parse error in '" + path + "' at byte offset " + std::to_string(r.offset()) +
                      ": n_axes must be 2 or 3");
    std::vector<std::int64_t> dims(n_axes);
    for (auto& d : dims) d = r.i64();
    const auto n_comp = r.i64();
    const auto n_snap = r.i64();
    const auto has_ref = r.i64();
    if (n_comp != n_axes || n_snap < 2 || (has_ref != 0 && has_ref != 1))
        throw IoError("parse error in '" + path + "' at byte offset " + std::to_string(r.offset()) +
                      ": inconsistent header counts");

    std::vector<std::vector<double>> coords(n_axes);
    for (std::int64_t a = 0; a < n_axes; ++a) {
        if (dims[a] < 2)
            throw IoError("parse error in '" + path + "': axis dim must be >= 2");
        coords[a].resize(dims[a]);
        r.doubles(coords[a].data(), coords[a].size());
    }
    GridPtr grid = std::make_shared<Grid>(std::move(coords));

    VectorXd times(n_snap);
    r.doubles(times.data(), static_cast<std::size_t>(n_snap));
    for (std::int64_t i = 1; i < n_snap; ++i)
        if (!(times[i] > times[i - 1]))
            throw IoError("parse error in '" + path + "': times not strictly increasing");

    auto read_field = [&]() {
        std::vector<VectorXd> comps(n_comp);
        for (auto& cmp : comps) {
            cmp.resize(static_cast<Eigen::Index>(grid->n_points()));
            r.doubles(cmp.data(), grid->n_points());
        }
        return VectorField(grid, std::move(comps));
    };

    std::optional<VectorField> reference;
    if (has_ref) reference = read_field();
    std::vector<VectorField> fields;
    fields.reserve(n_snap);
    for (std::int64_t i = 0; i < n_snap; ++i) fields.push_back(read_field());

    if (reference) return SnapshotSet(std::move(times), std::move(fields), std::move(*reference));
    return SnapshotSet(std::move(times), std::move(fields));
}

}  // namespace

SnapshotSet load_snapshots(const std::string& path, FileFormat format) {
    return format == FileFormat::TextTable ? load_snapshots_text(path)
                                           : load_snapshots_binary(path);
}

SnapshotSet load_snapshots(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    char magic[8] = {};
    in.read(magic, 8);
    in.close();
    if (std::memcmp(magic, kSnapMagicBin, 8) == 0) return load_snapshots_binary(path);
    return load_snapshots_text(path);
}

void save_rom_record(const RomRecord& rec, const std::string& path, FileFormat format,
                     const std::vector<std::string>& header_comments) {
    const int n = rec.n_modes;
    if (rec.constant.size() != n || rec.linear.rows() != n || rec.linear.cols() != n ||
        rec.quad.size() != static_cast<std::size_t>(n) * n * n)
        throw std::invalid_argument("save_rom_record: inconsistent array sizes");

    if (format == FileFormat::TextTable) {
        std::ofstream os(path);
        if (!os) throw IoError("cannot open '" + path + "' for writing");
        for (const auto& c : header_comments) os << "# " << c << "\n";
        os << kRomMagicText << " 1 " << n << "\n";
        os << "# A_r\n";
        for (int r = 0; r < n; ++r) os << fmt_double(rec.constant[r]) << (r + 1 == n ? "\n" : " ");
        os << "# C_kr, row-major in k\n";
        for (int k = 0; k < n; ++k)
            for (int r = 0; r < n; ++r)
                os << fmt_double(rec.linear(k, r)) << (r + 1 == n ? "\n" : " ");
        os << "# B_ksr, k-major then s then r\n";
        std::size_t idx = 0;
        for (int k = 0; k < n; ++k)
            for (int s = 0; s < n; ++s)
                for (int r = 0; r < n; ++r, ++idx)
                    os << fmt_double(rec.quad[idx]) << (r + 1 == n ? "\n" : " ");
        os.close();
        if (!os) throw IoError("write failure on '" + path + "'");
        return;
    }

    BinWriter w(path);
    w.raw(kRomMagicBin, 8);
    w.i64(1);
    w.i64(n);
    w.doubles(rec.constant.data(), static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        for (int r = 0; r < n; ++r) {
            const double v = rec.linear(k, r);
            w.doubles(&v, 1);
        }
    w.doubles(rec.quad.data(), rec.quad.size());
    w.close();
}

RomRecord load_rom_record(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open '" + path + "' for reading");
    char magic[8] = {};
    probe.read(magic, 8);
    probe.close();

    RomRecord rec;
    if (std::memcmp(magic, kRomMagicBin, 8) == 0) {
        BinReader r(path);
        r.raw(magic, 8);
        const auto version = r.i64();
        if (version != 1)
            throw IoError("parse error in '" + path + "': unsupported version " +
                          std::to_string(version));
        const auto n = r.i64();
        if (n < 1 || n > 4096)
            throw IoError("parse error in '" + path + "': implausible n_modes " +
                          std::to_string(n));
        rec.n_modes = static_cast<int>(n);
        rec.constant.resize(n);
        r.doubles(rec.constant.data(), static_cast<std::size_t>(n));
        rec.linear.resize(n, n);
        for (int k = 0; k < n; ++k)
            for (int c = 0; c < n; ++c) r.doubles(&rec.linear(k, c), 1);
        rec.quad.resize(static_cast<std::size_t>(n) * n * n);
        r.doubles(rec.quad.data(), rec.quad.size());
        return rec;
    }

    TextReader r(path);
    const std::string tag = r.next();
    if (tag != kRomMagicText) r.fail("bad magic '" + tag + "'");
    const long long version = r.next_int();
    if (version != 1) r.fail("unsupported version " + std::to_string(version));
    const long long n = r.next_int();
    if (n < 1 || n > 4096) r.fail("implausible n_modes " + std::to_string(n));
    rec.n_modes = static_cast<int>(n);
    rec.constant.resize(n);
    for (long long i = 0; i < n; ++i) rec.constant[i] = r.next_double();
    rec.linear.resize(n, n);
    for (long long k = 0; k < n; ++k)
        for (long long c = 0; c < n; ++c) rec.linear(k, c) = r.next_double();
    rec.quad.resize(static_cast<std::size_t>(n) * n * n);
    for (auto& v : rec.quad) v = r.next_double();
    if (!r.at_eof()) r.fail("trailing data after tensor");
    return rec;
}

void save_time_table(const VectorXd& times, const MatrixXd& values, const std::string& path,
                     const std::vector<std::string>& header_comments) {
    if (times.size() != values.rows())
        throw std::invalid_argument("save_time_table: row count mismatch");
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    for (const auto& c : header_comments) os << "# " << c << "\n";
    os << "# rows: " << times.size() << "  cols: 1+" << values.cols() << "\n";
    for (Eigen::Index i = 0; i < times.size(); ++i) {
        os << fmt_double(times[i]);
        for (Eigen::Index j = 0; j < values.cols(); ++j) os << " " << fmt_double(values(i, j));
        os << "\n";
    }
    os.close();
    if (!os) throw IoError("write failure on '" + path + "'");
}

std::pair<VectorXd, MatrixXd> load_time_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::vector<double> row;
        double v;
        while (ls >> v) row.push_back(v);
        if (!ls.eof()) {
            std::string junk;
            ls.clear();
            ls >> junk;
            throw IoError("parse error in '" + path + "' near line " + std::to_string(lineno) +
                          ": bad token '" + junk + "'");
        }
        if (row.empty()) continue;
        if (!rows.empty() && row.size() != rows.front().size())
            throw IoError("parse error in '" + path + "' near line " + std::to_string(lineno) +
                          ": ragged row (" + std::to_string(row.size()) + " vs " +
                          std::to_string(rows.front().size()) + " columns)");
        rows.push_back(std::move(row));
    }
    if (rows.empty() || rows.front().size() < 2)
        throw IoError("parse error in '" + path + "': expected a time column plus data columns");
    VectorXd times(rows.size());
    MatrixXd values(rows.size(), rows.front().size() - 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        times[static_cast<Eigen::Index>(i)] = rows[i][0];
        for (std::size_t j = 1; j < rows[i].size(); ++j)
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - 1)) = rows[i][j];
    }
    return {std::move(times), std::move(values)};
}

void write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << contents;
    os.close();
    if (!os) throw IoError("write failure on '" + path + "'");
}

std::string file_hash_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for hashing");
    std::uint64_t h = 1469598103934665603ull;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (in.eof()) break;
    }
    char out[20];
    std::snprintf(out, sizeof out, "%016" PRIx64, h);
    return out;
}

}  // namespace flowest
