#include "flexamg/sparse.hpp"

#include "flexamg/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace flexamg {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

} // namespace

SparseMatrix read_matrix_market(std::istream &in) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("matrix market: empty input");
    std::istringstream header(line);
    std::string banner, object, format, field, symmetry;
    header >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket" || lower(object) != "matrix" || lower(format) != "coordinate")
        throw ValidationError("matrix market: only 'matrix coordinate' files are supported");
    field = lower(field);
    symmetry = lower(symmetry);
    if (field != "real" && field != "integer" && field != "pattern")
        throw ValidationError("matrix market: unsupported field '" + field + "'");
    if (symmetry != "general" && symmetry != "symmetric")
        throw ValidationError("matrix market: unsupported symmetry '" + symmetry + "'");

    while (std::getline(in, line))
        if (!line.empty() && line[0] != '%') break;
    std::size_t nrows = 0, ncols = 0, nnz = 0;
    {
        std::istringstream sz(line);
        if (!(sz >> nrows >> ncols >> nnz)) throw ValidationError("matrix market: bad size line");
    }
    std::vector<Triplet> entries;
    entries.reserve(symmetry == "symmetric" ? 2 * nnz : nnz);
    for (std::size_t k = 0; k < nnz; ++k) {
        if (!std::getline(in, line)) throw ValidationError("matrix market: truncated entry list");
        if (line.empty() || line[0] == '%') {
            --k;
            continue;
        }
        std::istringstream es(line);
        std::size_t i = 0, j = 0;
        double v = 1.0;
        if (!(es >> i >> j)) throw ValidationError("matrix market: bad entry line " + std::to_string(k));
        if (field != "pattern" && !(es >> v))
            throw ValidationError("matrix market: missing value on entry " + std::to_string(k));
        if (i == 0 || j == 0 || i > nrows || j > ncols)
            throw ValidationError("matrix market: index out of range on entry " + std::to_string(k));
        entries.push_back({i - 1, j - 1, v});
        if (symmetry == "symmetric" && i != j) entries.push_back({j - 1, i - 1, v});
    }
    return SparseMatrix::from_triplets(nrows, ncols, std::move(entries));
}

SparseMatrix read_matrix_market(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    return read_matrix_market(in);
}

void write_matrix_market(std::ostream &out, const SparseMatrix &A) {
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << A.nrows() << ' ' << A.ncols() << ' ' << A.nnz() << '\n';
    char buf[64];
    for (std::size_t i = 0; i < A.nrows(); ++i) {
        for (std::size_t k = A.row_begin(i); k < A.row_end(i); ++k) {
            auto res = std::to_chars(buf, buf + sizeof buf, A.value(k), std::chars_format::general, 17);
            out << i + 1 << ' ' << A.col(k) + 1 << ' ' << std::string_view(buf, res.ptr) << '\n';
        }
    }
}

void write_matrix_market(const std::string &path, const SparseMatrix &A) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    write_matrix_market(out, A);
}

} // namespace flexamg
