#include "nested.h"

#include <stdbool.h>
#include <stdint.h>
#include <stdio.h>

static int64_t r_root = 0;  // root: 0=Outer 1=Other
static int64_t r_Outer = 0;  // root.Outer: 0=Inner1 1=Inner2
static int nested_err = 0;

void nested_init(void) {
  r_root = 0;
  r_Outer = 0;
  nested_err = 0;
}

void nested_event_E(void) {
  nested_err = 0;
  if ((r_root == 0) && (r_Outer == 0)) {
    r_Outer = 1;
  } else if (r_root == 0) {
    int64_t n0 = 1;
    int64_t n1 = 0;
    r_root = n0;
    r_Outer = n1;
  }
}

void nested_event_back(void) {
  nested_err = 0;
  if (r_root == 1) {
    int64_t n0 = 0;
    int64_t n1 = 0;
    r_root = n0;
    r_Outer = n1;
  }
}

void nested_tick(void) {
  nested_err = 0;
}

int nested_error(void) {
  return nested_err;
}

void nested_dump_state(void) {
  printf("r_root=%lld\n", (long long)r_root);
  printf("r_Outer=%lld\n", (long long)r_Outer);
}
