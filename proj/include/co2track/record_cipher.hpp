// Copyright 2026 The co2track Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <string_view>

namespace co2track {

/// Environment variable holding the report passphrase.
inline constexpr const char* kPassphraseEnvVar = "CO2TRACK_PASSPHRASE";

using Salt = std::array<std::uint8_t, 16>;

/// Per-field authenticated encryption for report cells.
///
/// Keys are derived from a passphrase with Argon2id and a per-file salt;
/// fields are sealed with XChaCha20-Poly1305 using the column name as
/// associated data. A sealed cell is `$c2t1$` followed by base64 of
/// salt || nonce || ciphertext, so it never needs CSV quoting.
class RecordCipher {
 public:
  /// Throws EncryptionFailure for an empty passphrase or if libsodium cannot
  /// be initialised.
  explicit RecordCipher(std::string passphrase);
  ~RecordCipher();

  RecordCipher(const RecordCipher&) = delete;
  RecordCipher& operator=(const RecordCipher&) = delete;

  /// Reads kPassphraseEnvVar. Throws EncryptionFailure when unset or empty.
  static RecordCipher from_env();

  static Salt new_salt();
  static bool is_sealed(std::string_view cell) noexcept;
  /// Throws DecryptFailure if `cell` is not a well-formed sealed cell.
  static Salt salt_of(std::string_view cell);

  std::string seal(std::string_view plaintext, std::string_view column,
                   const Salt& salt) const;
  /// Throws DecryptFailure on a wrong key, tampering or a malformed cell.
  std::string open(std::string_view cell, std::string_view column) const;

 private:
  using Key = std::array<std::uint8_t, 32>;
  const Key& key_for(const Salt& salt) const;

  std::string passphrase_;
  mutable std::mutex mu_;
  mutable std::map<Salt, Key> keys_;
};

}  // namespace co2track
