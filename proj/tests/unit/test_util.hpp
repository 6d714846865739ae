#pragma once

#include <gtest/gtest.h>

#include "threadshim/error.hpp"

// Expects `stmt` to throw threadshim::Error with code `errc`.
#define EXPECT_ERRC(stmt, errc)                                                   \
  do {                                                                            \
    try {                                                                         \
      stmt;                                                                       \
      ADD_FAILURE() << "expected " << threadshim::to_string(errc) << ", no throw"; \
    } catch (const threadshim::Error& e_) {                                       \
      EXPECT_EQ(e_.code(), errc) << e_.what();                                    \
    }                                                                             \
  } while (0)
