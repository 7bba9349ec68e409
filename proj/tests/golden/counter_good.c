#include "counter_good.h"

#include <stdbool.h>
#include <stdint.h>
#include <stdio.h>

static int64_t r_root = 0;  // root: 0=Idle
// speed setting
static int64_t x = 0;
static int counter_good_err = 0;

void counter_good_init(void) {
  r_root = 0;
  x = 0;
  counter_good_err = 0;
}

void counter_good_event_inc(void) {
  counter_good_err = 0;
  if ((r_root == 0) && (x < 3)) {
    // count up
    int64_t n0 = 0;
    int64_t n1 = x + 1;
    if (n1 < 0 || n1 > 3) {
      counter_good_err = 3;
      return;
    }
    r_root = n0;
    x = n1;
  }
}

void counter_good_event_dec(void) {
  counter_good_err = 0;
  if ((r_root == 0) && (x > 0)) {
    int64_t n0 = 0;
    int64_t n1 = x - 1;
    if (n1 < 0 || n1 > 3) {
      counter_good_err = 4;
      return;
    }
    r_root = n0;
    x = n1;
  }
}

void counter_good_tick(void) {
  counter_good_err = 0;
}

int counter_good_error(void) {
  return counter_good_err;
}

void counter_good_dump_state(void) {
  printf("r_root=%lld\n", (long long)r_root);
  printf("x=%lld\n", (long long)x);
}
