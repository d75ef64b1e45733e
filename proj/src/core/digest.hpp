#pragma once

#include <string>
#include <string_view>

namespace unibeta {

// Incremental SHA-256 (OpenSSL EVP), hex-encoded on finish.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(std::string_view bytes);
  void update_double(double v);
  void update_int(long long v);
  std::string finish();

 private:
  void* ctx_;
};

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

}  // namespace unibeta
