#include "mulink/coding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mulink/rng.hpp"

namespace mulink {

namespace {

constexpr int kQcBaseCols = 24;

// Dense GF(2) row: n bits in 64-bit words.
struct BitRow {
  std::vector<std::uint64_t> w;
  explicit BitRow(int nbits) : w((nbits + 63) / 64, 0) {}
  void set(int i) { w[i >> 6] |= (std::uint64_t(1) << (i & 63)); }
  bool get(int i) const { return (w[i >> 6] >> (i & 63)) & 1; }
  void operator^=(const BitRow& o) {
    for (std::size_t j = 0; j < w.size(); ++j) w[j] ^= o.w[j];
  }
};

}  // namespace

CodeSpec::CodeSpec(int n, std::vector<std::vector<int>> rows_cols, std::string name)
    : n_(n), name_(std::move(name)), rows_(std::move(rows_cols)) {
  if (n <= 0 || rows_.empty()) throw std::invalid_argument("CodeSpec: empty matrix");
  const int m = static_cast<int>(rows_.size());
  for (auto& r : rows_) {
    std::sort(r.begin(), r.end());
    for (int c : r) {
      if (c < 0 || c >= n) throw std::invalid_argument("CodeSpec: column index out of range");
    }
  }

  // GF(2) Gaussian elimination to reduced row echelon form. Pivot columns
  // become parity positions; the rest are systematic message positions.
  std::vector<BitRow> mat(m, BitRow(n));
  for (int i = 0; i < m; ++i)
    for (int c : rows_[i]) mat[i].set(c);

  std::vector<int> pivot_col(m, -1);
  int rank = 0;
  for (int col = 0; col < n && rank < m; ++col) {
    int sel = -1;
    for (int i = rank; i < m; ++i) {
      if (mat[i].get(col)) {
        sel = i;
        break;
      }
    }
    if (sel < 0) continue;
    std::swap(mat[sel], mat[rank]);
    for (int i = 0; i < m; ++i) {
      if (i != rank && mat[i].get(col)) mat[i] ^= mat[rank];
    }
    pivot_col[rank] = col;
    ++rank;
  }
  if (rank < m) {
    throw std::invalid_argument("CodeSpec: parity-check matrix is rank deficient (rank " +
                                std::to_string(rank) + " of " + std::to_string(m) + ")");
  }

  k_ = n_ - m;
  par_pos_.assign(pivot_col.begin(), pivot_col.end());
  std::vector<char> is_pivot(n, 0);
  for (int c : par_pos_) is_pivot[c] = 1;
  msg_pos_.reserve(k_);
  for (int c = 0; c < n; ++c)
    if (!is_pivot[c]) msg_pos_.push_back(c);

  // Restrict each RREF row to the message columns: p[i] = <row_i, msg>.
  const int kw = (k_ + 63) / 64;
  parity_rows_.assign(m, std::vector<std::uint64_t>(kw, 0));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < k_; ++j) {
      if (mat[i].get(msg_pos_[j])) parity_rows_[i][j >> 6] |= (std::uint64_t(1) << (j & 63));
    }
  }
}

BitVec CodeSpec::encode(std::span<const std::uint8_t> msg) const {
  if (static_cast<int>(msg.size()) != k_) {
    throw std::invalid_argument("encode: message length " + std::to_string(msg.size()) +
                                " != k " + std::to_string(k_));
  }
  const int kw = (k_ + 63) / 64;
  std::vector<std::uint64_t> mw(kw, 0);
  for (int j = 0; j < k_; ++j)
    if (msg[j] & 1) mw[j >> 6] |= (std::uint64_t(1) << (j & 63));

  BitVec cw(n_, 0);
  for (int j = 0; j < k_; ++j) cw[msg_pos_[j]] = msg[j] & 1;
  const int m = num_checks();
  for (int i = 0; i < m; ++i) {
    std::uint64_t acc = 0;
    const auto& row = parity_rows_[i];
    for (int w = 0; w < kw; ++w) acc ^= row[w] & mw[w];
    cw[par_pos_[i]] = static_cast<std::uint8_t>(std::popcount(acc) & 1);
  }
  return cw;
}

bool CodeSpec::parity_ok(std::span<const std::uint8_t> codeword) const {
  if (static_cast<int>(codeword.size()) != n_) return false;
  for (const auto& row : rows_) {
    unsigned s = 0;
    for (int c : row) s ^= codeword[c] & 1;
    if (s) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Quasi-cyclic construction

CodeSpec CodeSpec::make_qc(double rate, int n, std::uint64_t seed) {
  if (n <= 0 || n % kQcBaseCols != 0) {
    throw std::invalid_argument("make_qc: n must be a positive multiple of 24");
  }
  const int z = n / kQcBaseCols;
  const int base_rows = static_cast<int>(std::lround((1.0 - rate) * kQcBaseCols));
  if (base_rows < 2 || base_rows >= kQcBaseCols) {
    throw std::invalid_argument("make_qc: rate outside supported range");
  }

  for (std::uint64_t attempt = 0; attempt < 32; ++attempt) {
    RngStream rng = RngStream::derive(seed, {kStreamCodeGen, std::uint64_t(n), attempt});

    // Near-regular base graph: every column has weight 3, rows balanced.
    std::vector<std::vector<int>> base_cols(kQcBaseCols);
    std::vector<int> row_deg(base_rows, 0);
    for (int j = 0; j < kQcBaseCols; ++j) {
      std::vector<int> order(base_rows);
      std::iota(order.begin(), order.end(), 0);
      std::vector<std::uint64_t> key(base_rows);
      for (int i = 0; i < base_rows; ++i) key[i] = rng.next_u64();
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        return std::pair(row_deg[a], key[a]) < std::pair(row_deg[b], key[b]);
      });
      for (int e = 0; e < 3; ++e) {
        base_cols[j].push_back(order[e]);
        ++row_deg[order[e]];
      }
      std::sort(base_cols[j].begin(), base_cols[j].end());
    }

    // Circulant shifts chosen greedily to keep girth >= 6 where possible:
    // for two columns sharing rows r1,r2 require
    // s[r1,j]-s[r2,j] != s[r1,j']-s[r2,j'] (mod z).
    std::vector<std::vector<int>> shift(kQcBaseCols, std::vector<int>(3, 0));
    for (int j = 0; j < kQcBaseCols; ++j) {
      bool placed = false;
      for (int attempt2 = 0; attempt2 < 200 && !placed; ++attempt2) {
        for (int e = 0; e < 3; ++e) shift[j][e] = static_cast<int>(rng.uniform_int(z));
        bool ok = true;
        for (int jp = 0; jp < j && ok; ++jp) {
          for (int a = 0; a < 3 && ok; ++a) {
            for (int b = a + 1; b < 3 && ok; ++b) {
              const int r1 = base_cols[j][a], r2 = base_cols[j][b];
              // find both rows in column jp
              int sa = -1, sb = -1;
              for (int e = 0; e < 3; ++e) {
                if (base_cols[jp][e] == r1) sa = shift[jp][e];
                if (base_cols[jp][e] == r2) sb = shift[jp][e];
              }
              if (sa < 0 || sb < 0) continue;
              const int d1 = ((shift[j][a] - shift[j][b]) % z + z) % z;
              const int d2 = ((sa - sb) % z + z) % z;
              if (d1 == d2) ok = false;
            }
          }
        }
        placed = ok;
      }
      // if not placed after retries, keep the last draw (rare, mild loss)
    }

    // Lift.
    std::vector<std::vector<int>> rows(base_rows * z);
    for (int j = 0; j < kQcBaseCols; ++j) {
      for (int e = 0; e < 3; ++e) {
        const int bi = base_cols[j][e];
        const int s = shift[j][e];
        for (int a = 0; a < z; ++a) {
          rows[bi * z + a].push_back(j * z + (a + s) % z);
        }
      }
    }

    try {
      std::ostringstream nm;
      nm << "qc_r" << base_rows << "of24_n" << n;
      return CodeSpec(n, std::move(rows), nm.str());
    } catch (const std::invalid_argument&) {
      // rank deficient lift; retry with fresh shifts
    }
  }
  throw std::invalid_argument("make_qc: failed to build a full-rank code");
}

// ---------------------------------------------------------------------------
// Progressive edge growth, (dv,dc)-regular

CodeSpec CodeSpec::make_peg(int n, int dv, int dc, std::uint64_t seed) {
  if (n <= 0 || dv < 2 || dc <= dv || (static_cast<long>(n) * dv) % dc != 0) {
    throw std::invalid_argument("make_peg: need n*dv divisible by dc and dc > dv >= 2");
  }
  const int m = static_cast<int>(static_cast<long>(n) * dv / dc);

  for (std::uint64_t attempt = 0; attempt < 8; ++attempt) {
    RngStream rng = RngStream::derive(seed, {kStreamCodeGen, std::uint64_t(n), 100 + attempt});
    std::vector<std::uint64_t> tie(m);
    for (auto& t : tie) t = rng.next_u64();

    std::vector<std::vector<int>> check_vars(m);
    std::vector<std::vector<int>> var_checks(n);
    std::vector<int> check_deg(m, 0);

    auto pick = [&](const std::vector<char>& allowed) {
      int best = -1;
      for (int c = 0; c < m; ++c) {
        if (!allowed[c] || check_deg[c] >= dc) continue;
        if (best < 0 || std::pair(check_deg[c], tie[c]) < std::pair(check_deg[best], tie[best]))
          best = c;
      }
      return best;
    };

    bool failed = false;
    std::vector<char> reach(m), allowed(m);
    std::vector<int> frontier, next;
    for (int v = 0; v < n && !failed; ++v) {
      for (int e = 0; e < dv && !failed; ++e) {
        int chosen = -1;
        if (var_checks[v].empty()) {
          std::fill(allowed.begin(), allowed.end(), 1);
          chosen = pick(allowed);
        } else {
          // BFS from v over the current graph; connect to a check at
          // maximal distance (or unreachable).
          std::fill(reach.begin(), reach.end(), 0);
          std::vector<char> var_seen(n, 0);
          var_seen[v] = 1;
          frontier.clear();
          for (int c : var_checks[v]) {
            reach[c] = 1;
            frontier.push_back(c);
          }
          std::vector<char> prev_reach;
          while (true) {
            prev_reach = reach;
            next.clear();
            for (int c : frontier) {
              for (int vv : check_vars[c]) {
                if (var_seen[vv]) continue;
                var_seen[vv] = 1;
                for (int cc : var_checks[vv]) {
                  if (!reach[cc]) {
                    reach[cc] = 1;
                    next.push_back(cc);
                  }
                }
              }
            }
            const bool all = std::all_of(reach.begin(), reach.end(), [](char x) { return x; });
            if (next.empty() || all) break;
            frontier = next;
          }
          // prefer checks never reached; otherwise those that only became
          // reachable in the last expansion (maximal depth)
          bool any_unreached = false;
          for (int c = 0; c < m; ++c) {
            allowed[c] = !reach[c];
            any_unreached |= allowed[c];
          }
          if (!any_unreached)
            for (int c = 0; c < m; ++c) allowed[c] = reach[c] && !prev_reach[c];
          chosen = pick(allowed);
          if (chosen < 0) {
            // every candidate saturated; fall back to any non-neighbor
            for (int c = 0; c < m; ++c) {
              allowed[c] = 1;
              for (int cc : var_checks[v])
                if (cc == c) allowed[c] = 0;
            }
            chosen = pick(allowed);
          }
        }
        if (chosen < 0) {
          failed = true;
          break;
        }
        check_vars[chosen].push_back(v);
        var_checks[v].push_back(chosen);
        ++check_deg[chosen];
      }
    }
    if (failed) continue;

    try {
      std::ostringstream nm;
      nm << "peg_" << dv << "_" << dc << "_n" << n;
      return CodeSpec(n, std::move(check_vars), nm.str());
    } catch (const std::invalid_argument&) {
      // rank deficient; retry
    }
  }
  throw std::invalid_argument("make_peg: failed to build a full-rank code");
}

// ---------------------------------------------------------------------------
// alist I/O (MacKay's format, 1-based indices)

CodeSpec CodeSpec::load_alist(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("load_alist: cannot open " + path);
  int n = 0, m = 0, wcol = 0, wrow = 0;
  in >> n >> m >> wcol >> wrow;
  if (!in || n <= 0 || m <= 0) throw std::invalid_argument("load_alist: bad header in " + path);
  std::vector<int> col_w(n), row_w(m);
  for (auto& w : col_w) in >> w;
  for (auto& w : row_w) in >> w;
  // column lists (padded with zeros up to wcol)
  for (int j = 0; j < n; ++j) {
    for (int e = 0; e < wcol; ++e) {
      int idx;
      in >> idx;
      (void)idx;
    }
  }
  std::vector<std::vector<int>> rows(m);
  for (int i = 0; i < m; ++i) {
    for (int e = 0; e < wrow; ++e) {
      int idx;
      in >> idx;
      if (idx > 0) rows[i].push_back(idx - 1);
    }
  }
  if (!in) throw std::invalid_argument("load_alist: truncated file " + path);
  return CodeSpec(n, std::move(rows), path);
}

void CodeSpec::save_alist(const std::string& path) const {
  const int m = num_checks();
  std::vector<std::vector<int>> cols(n_);
  for (int i = 0; i < m; ++i)
    for (int c : rows_[i]) cols[c].push_back(i);
  int wcol = 0, wrow = 0;
  for (const auto& c : cols) wcol = std::max(wcol, static_cast<int>(c.size()));
  for (const auto& r : rows_) wrow = std::max(wrow, static_cast<int>(r.size()));

  std::ofstream out(path);
  if (!out) throw std::invalid_argument("save_alist: cannot write " + path);
  out << n_ << " " << m << "\n" << wcol << " " << wrow << "\n";
  for (int j = 0; j < n_; ++j) out << cols[j].size() << (j + 1 < n_ ? " " : "\n");
  for (int i = 0; i < m; ++i) out << rows_[i].size() << (i + 1 < m ? " " : "\n");
  for (int j = 0; j < n_; ++j) {
    for (int e = 0; e < wcol; ++e) out << (e < static_cast<int>(cols[j].size()) ? cols[j][e] + 1 : 0)
                                       << (e + 1 < wcol ? " " : "\n");
  }
  for (int i = 0; i < m; ++i) {
    for (int e = 0; e < wrow; ++e) out << (e < static_cast<int>(rows_[i].size()) ? rows_[i][e] + 1 : 0)
                                       << (e + 1 < wrow ? " " : "\n");
  }
}

// ---------------------------------------------------------------------------
// Normalized min-sum decoder

LdpcDecoder::LdpcDecoder(const CodeSpec& code, double norm_factor)
    : code_(&code), norm_(norm_factor) {
  const auto& rows = code.rows();
  const int n = code.n();
  n_edges_ = 0;
  check_ptr_.reserve(rows.size() + 1);
  check_ptr_.push_back(0);
  for (const auto& r : rows) {
    n_edges_ += static_cast<int>(r.size());
    check_ptr_.push_back(n_edges_);
  }
  check_var_.reserve(n_edges_);
  for (const auto& r : rows) check_var_.insert(check_var_.end(), r.begin(), r.end());

  std::vector<int> var_deg(n, 0);
  for (int v : check_var_) ++var_deg[v];
  var_ptr_.assign(n + 1, 0);
  for (int v = 0; v < n; ++v) var_ptr_[v + 1] = var_ptr_[v] + var_deg[v];
  var_edge_.assign(n_edges_, 0);
  std::vector<int> fill(var_ptr_.begin(), var_ptr_.end() - 1);
  for (int e = 0; e < n_edges_; ++e) var_edge_[fill[check_var_[e]]++] = e;
}

DecodeResult LdpcDecoder::decode(std::span<const double> llrs, int max_iters) const {
  const int n = code_->n();
  if (static_cast<int>(llrs.size()) != n) {
    throw std::invalid_argument("decode: llr length mismatch");
  }
  if (max_iters < 1) throw std::invalid_argument("decode: max_iters must be >= 1");

  // Internal sign convention: lambda = log(P0/P1) = -llr.
  std::vector<double> lam(n);
  for (int v = 0; v < n; ++v) lam[v] = -llrs[v];

  const int m = code_->num_checks();
  std::vector<double> v2c(n_edges_), c2v(n_edges_, 0.0), total(n);
  for (int e = 0; e < n_edges_; ++e) v2c[e] = lam[check_var_[e]];

  BitVec hard(n, 0);
  DecodeResult res;
  for (int iter = 1; iter <= max_iters; ++iter) {
    // check update
    for (int c = 0; c < m; ++c) {
      const int b = check_ptr_[c], e0 = check_ptr_[c + 1];
      double min1 = 1e300, min2 = 1e300;
      int argmin = -1;
      int sign = 0;  // parity of negative messages
      for (int e = b; e < e0; ++e) {
        const double x = v2c[e];
        const double a = std::abs(x);
        if (x < 0) sign ^= 1;
        if (a < min1) {
          min2 = min1;
          min1 = a;
          argmin = e;
        } else if (a < min2) {
          min2 = a;
        }
      }
      for (int e = b; e < e0; ++e) {
        const double a = (e == argmin) ? min2 : min1;
        int s = sign;
        if (v2c[e] < 0) s ^= 1;
        c2v[e] = (s ? -1.0 : 1.0) * norm_ * a;
      }
    }
    // variable update + hard decision
    for (int v = 0; v < n; ++v) {
      double t = lam[v];
      for (int p = var_ptr_[v]; p < var_ptr_[v + 1]; ++p) t += c2v[var_edge_[p]];
      total[v] = t;
      hard[v] = (t < 0.0) ? 1 : 0;
    }
    res.iterations = iter;
    if (code_->parity_ok(hard)) {
      res.success = true;
      break;
    }
    if (iter == max_iters) break;
    for (int e = 0; e < n_edges_; ++e) v2c[e] = total[check_var_[e]] - c2v[e];
  }

  const auto& mp = code_->message_positions();
  res.msg.resize(mp.size());
  for (std::size_t i = 0; i < mp.size(); ++i) res.msg[i] = hard[mp[i]];
  return res;
}

// ---------------------------------------------------------------------------
// CRC-24 and segmentation

namespace {
constexpr std::uint32_t kCrc24Poly = 0x864CFB;

std::uint32_t crc24(std::span<const std::uint8_t> bits) {
  std::uint32_t reg = 0;
  for (std::uint8_t b : bits) {
    reg ^= (static_cast<std::uint32_t>(b & 1) << 23);
    const bool msb = reg & 0x800000;
    reg = (reg << 1) & 0xFFFFFF;
    if (msb) reg ^= kCrc24Poly;
  }
  return reg;
}
}  // namespace

BitVec crc24_append(std::span<const std::uint8_t> payload) {
  BitVec out(payload.begin(), payload.end());
  const std::uint32_t c = crc24(payload);
  for (int i = 23; i >= 0; --i) out.push_back((c >> i) & 1);
  return out;
}

bool crc24_ok(std::span<const std::uint8_t> payload_with_crc) {
  if (payload_with_crc.size() < 24) return false;
  const std::size_t np = payload_with_crc.size() - 24;
  const std::uint32_t c = crc24(payload_with_crc.subspan(0, np));
  for (int i = 0; i < 24; ++i) {
    if (((c >> (23 - i)) & 1) != (payload_with_crc[np + i] & 1)) return false;
  }
  return true;
}

TbLayout segment(long tb_payload_bits, int max_cb_bits, int crc_bits) {
  if (tb_payload_bits <= 0) throw std::invalid_argument("segment: payload must be positive");
  if (max_cb_bits <= crc_bits) throw std::invalid_argument("segment: max_cb must exceed crc");
  const long cap = max_cb_bits - crc_bits;
  const int num_cb = static_cast<int>((tb_payload_bits + cap - 1) / cap);

  TbLayout layout;
  layout.num_cb = num_cb;
  layout.crc_bits = crc_bits;
  const long base = tb_payload_bits / num_cb;
  const long rem = tb_payload_bits % num_cb;
  for (int i = 0; i < num_cb; ++i) {
    layout.cb_payload_bits.push_back(static_cast<int>(base + (i < rem ? 1 : 0)));
  }
  return layout;
}

std::vector<BitVec> split_payload(std::span<const std::uint8_t> payload, const TbLayout& layout) {
  std::vector<BitVec> blocks;
  std::size_t off = 0;
  for (int sz : layout.cb_payload_bits) {
    if (off + sz > payload.size()) throw std::invalid_argument("split_payload: payload too short");
    blocks.emplace_back(payload.begin() + off, payload.begin() + off + sz);
    off += sz;
  }
  if (off != payload.size()) throw std::invalid_argument("split_payload: payload too long");
  return blocks;
}

BitVec reassemble(const std::vector<BitVec>& blocks) {
  BitVec out;
  for (const auto& b : blocks) out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace mulink
