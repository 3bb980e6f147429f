#pragma once

// Binary LDPC encoding/decoding, CRC-24, and transport-block segmentation.
//
// Two code constructions are provided: a quasi-cyclic family lifted from a
// near-regular protograph (any rate on a 1/24 grid, any length divisible by
// 24), and a (dv,dc)-regular PEG construction. Parity-check matrices can be
// exchanged in the alist text format.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mulink {

using BitVec = std::vector<std::uint8_t>;

class CodeSpec {
 public:
  // Builds the encoder structure (GF(2) elimination of H). Throws
  // std::invalid_argument if H is rank deficient or empty.
  CodeSpec(int n, std::vector<std::vector<int>> rows_cols, std::string name);

  int n() const { return n_; }
  int k() const { return k_; }
  double rate() const { return static_cast<double>(k_) / n_; }
  const std::string& name() const { return name_; }
  int num_checks() const { return static_cast<int>(rows_.size()); }
  const std::vector<std::vector<int>>& rows() const { return rows_; }

  // Positions of the k systematic (message) bits inside a codeword.
  const std::vector<int>& message_positions() const { return msg_pos_; }

  BitVec encode(std::span<const std::uint8_t> msg) const;
  bool parity_ok(std::span<const std::uint8_t> codeword) const;

  // Quasi-cyclic construction; n must be divisible by 24 and the rate is
  // realized on a 1/24 grid. Deterministic for a given seed.
  static CodeSpec make_qc(double rate, int n, std::uint64_t seed);

  // (dv,dc)-regular progressive-edge-growth construction; n*dv must be
  // divisible by dc.
  static CodeSpec make_peg(int n, int dv, int dc, std::uint64_t seed);

  static CodeSpec load_alist(const std::string& path);
  void save_alist(const std::string& path) const;

 private:
  int n_ = 0;
  int k_ = 0;
  std::string name_;
  std::vector<std::vector<int>> rows_;  // H: per-check column indices
  std::vector<int> msg_pos_;            // k systematic positions
  std::vector<int> par_pos_;            // n-k parity positions (pivot order)
  // Parity solve p = A*msg; A rows stored as k-bit words.
  std::vector<std::vector<std::uint64_t>> parity_rows_;
};

struct DecodeResult {
  BitVec msg;
  bool success = false;   // parity satisfied at exit
  int iterations = 0;
};

// Normalized min-sum belief propagation. Input LLRs follow the project
// convention log(P[b=1]/P[b=0]). Deterministic given inputs.
class LdpcDecoder {
 public:
  explicit LdpcDecoder(const CodeSpec& code, double norm_factor = 0.8);

  DecodeResult decode(std::span<const double> llrs, int max_iters = 30) const;

 private:
  const CodeSpec* code_;
  double norm_;
  int n_edges_;
  std::vector<int> check_ptr_, check_var_;  // CSR over checks
  std::vector<int> var_ptr_, var_edge_;     // per-variable edge list
};

// CRC-24 (polynomial 0x864CFB, zero init), appended MSB-first.
BitVec crc24_append(std::span<const std::uint8_t> payload);
bool crc24_ok(std::span<const std::uint8_t> payload_with_crc);

struct TbLayout {
  int num_cb = 0;
  int crc_bits = 0;
  std::vector<int> cb_payload_bits;  // per-CB payload (excludes CRC)
};

// L = ceil(payload / (max_cb - crc)) code blocks of near-equal size.
TbLayout segment(long tb_payload_bits, int max_cb_bits, int crc_bits);

// Splits payload bits per layout; inverse of reassemble.
std::vector<BitVec> split_payload(std::span<const std::uint8_t> payload, const TbLayout& layout);
BitVec reassemble(const std::vector<BitVec>& blocks);

}  // namespace mulink
