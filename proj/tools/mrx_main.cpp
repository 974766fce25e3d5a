// Copyright 2026 The MRX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cstdio>

int main() {
  std::puts("mrx: CLI under construction");
  return 0;
}
