#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sdlt/ledger.hpp"

namespace sdlt {

using Bytes = std::vector<std::uint8_t>;

/// Canonical binary encoding, also the on-disk snapshot format.
///
///   "SDLT" u8(version=1)
///   genesis:  str(tag)
///             u8(has_committee) [u32 n, n * id]        committee in stated order
///             u8(has_stake)     [u32 n, n * (id u64)]  sorted by id
///   u64 record_count
///   record:   digest[32] u8(kind: 0=BA 1=PoW 2=PoS) body
///     BA:  u32 n, n * id                               sorted
///     PoW: u64 work, id
///     PoS: u32 n, n * (id u64)  u32 m, m * (id id u64) signers sorted, transfers in order
///
/// Integers are little-endian, ids are 16 raw bytes, str is u32 length + bytes.
/// The payload digest leads each record, so among equal-length states the
/// byte order is decided by the first diverging record's digest.
Bytes canonical_bytes(const LedgerState& state);

/// Strict inverse of canonical_bytes: rejects unsorted sets, bad kinds,
/// truncated input and trailing bytes (ErrorCode::Malformed).
LedgerState decode_state(std::span<const std::uint8_t> bytes);

}  // namespace sdlt
