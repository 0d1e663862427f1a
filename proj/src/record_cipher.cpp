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

#include "co2track/record_cipher.hpp"

#include <sodium.h>

#include <cstdlib>
#include <cstring>
#include <vector>

#include "co2track/errors.hpp"

namespace co2track {

namespace {

constexpr std::string_view kPrefix = "$c2t1$";
constexpr std::size_t kNonceBytes = crypto_aead_xchacha20poly1305_ietf_NPUBBYTES;
constexpr std::size_t kTagBytes = crypto_aead_xchacha20poly1305_ietf_ABYTES;
constexpr int kBase64Variant = sodium_base64_VARIANT_ORIGINAL;

static_assert(crypto_pwhash_SALTBYTES == std::tuple_size_v<Salt>);
static_assert(crypto_aead_xchacha20poly1305_ietf_KEYBYTES == 32);

void ensure_sodium() {
  if (sodium_init() < 0) throw EncryptionFailure("libsodium initialisation failed");
}

std::vector<unsigned char> decode(std::string_view cell) {
  if (cell.substr(0, kPrefix.size()) != kPrefix) {
    throw DecryptFailure("field is not encrypted");
  }
  const std::string_view b64 = cell.substr(kPrefix.size());
  std::vector<unsigned char> raw(b64.size());
  std::size_t len = 0;
  if (sodium_base642bin(raw.data(), raw.size(), b64.data(), b64.size(), nullptr, &len, nullptr,
                        kBase64Variant) != 0) {
    throw DecryptFailure("malformed encrypted field");
  }
  raw.resize(len);
  if (raw.size() < std::tuple_size_v<Salt> + kNonceBytes + kTagBytes) {
    throw DecryptFailure("encrypted field is truncated");
  }
  return raw;
}

}  // namespace

RecordCipher::RecordCipher(std::string passphrase) : passphrase_(std::move(passphrase)) {
  if (passphrase_.empty()) throw EncryptionFailure("encryption passphrase is empty");
  ensure_sodium();
}

RecordCipher::~RecordCipher() {
  for (auto& [salt, key] : keys_) sodium_memzero(key.data(), key.size());
  sodium_memzero(passphrase_.data(), passphrase_.size());
}

RecordCipher RecordCipher::from_env() {
  const char* value = std::getenv(kPassphraseEnvVar);
  if (!value || !*value) {
    throw EncryptionFailure(std::string(kPassphraseEnvVar) + " is not set");
  }
  return RecordCipher(value);
}

Salt RecordCipher::new_salt() {
  ensure_sodium();
  Salt salt;
  randombytes_buf(salt.data(), salt.size());
  return salt;
}

bool RecordCipher::is_sealed(std::string_view cell) noexcept {
  return cell.substr(0, kPrefix.size()) == kPrefix;
}

Salt RecordCipher::salt_of(std::string_view cell) {
  const auto raw = decode(cell);
  Salt salt;
  std::memcpy(salt.data(), raw.data(), salt.size());
  return salt;
}

const RecordCipher::Key& RecordCipher::key_for(const Salt& salt) const {
  std::lock_guard lock(mu_);
  if (auto it = keys_.find(salt); it != keys_.end()) return it->second;
  Key key;
  if (crypto_pwhash(key.data(), key.size(), passphrase_.data(), passphrase_.size(), salt.data(),
                    crypto_pwhash_OPSLIMIT_INTERACTIVE, crypto_pwhash_MEMLIMIT_INTERACTIVE,
                    crypto_pwhash_ALG_ARGON2ID13) != 0) {
    throw EncryptionFailure("key derivation failed (out of memory)");
  }
  return keys_.emplace(salt, key).first->second;
}

std::string RecordCipher::seal(std::string_view plaintext, std::string_view column,
                               const Salt& salt) const {
  const Key& key = key_for(salt);
  std::vector<unsigned char> raw(salt.size() + kNonceBytes + plaintext.size() + kTagBytes);
  unsigned char* nonce = raw.data() + salt.size();
  unsigned char* body = nonce + kNonceBytes;
  std::memcpy(raw.data(), salt.data(), salt.size());
  randombytes_buf(nonce, kNonceBytes);
  unsigned long long body_len = 0;
  if (crypto_aead_xchacha20poly1305_ietf_encrypt(
          body, &body_len, reinterpret_cast<const unsigned char*>(plaintext.data()),
          plaintext.size(), reinterpret_cast<const unsigned char*>(column.data()), column.size(),
          nullptr, nonce, key.data()) != 0) {
    throw EncryptionFailure("encryption failed");
  }
  raw.resize(salt.size() + kNonceBytes + body_len);

  std::string out(kPrefix);
  const std::size_t b64_len = sodium_base64_encoded_len(raw.size(), kBase64Variant);
  std::string b64(b64_len, '\0');
  sodium_bin2base64(b64.data(), b64.size(), raw.data(), raw.size(), kBase64Variant);
  b64.resize(std::strlen(b64.c_str()));
  return out + b64;
}

std::string RecordCipher::open(std::string_view cell, std::string_view column) const {
  const auto raw = decode(cell);
  Salt salt;
  std::memcpy(salt.data(), raw.data(), salt.size());
  const Key& key = key_for(salt);
  const unsigned char* nonce = raw.data() + salt.size();
  const unsigned char* body = nonce + kNonceBytes;
  const std::size_t body_len = raw.size() - salt.size() - kNonceBytes;

  std::string plain(body_len - kTagBytes, '\0');
  unsigned long long plain_len = 0;
  if (crypto_aead_xchacha20poly1305_ietf_decrypt(
          reinterpret_cast<unsigned char*>(plain.data()), &plain_len, nullptr, body, body_len,
          reinterpret_cast<const unsigned char*>(column.data()), column.size(), nonce,
          key.data()) != 0) {
    throw DecryptFailure("cannot decrypt field (wrong passphrase or tampered data)");
  }
  plain.resize(plain_len);
  return plain;
}

}  // namespace co2track
