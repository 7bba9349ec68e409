#include "thermostat.h"

#include <stdbool.h>
#include <stdint.h>
#include <stdio.h>

static int64_t pc_div(int64_t a, int64_t b) {
  int64_t q;
  if (b == 0) return 0;
  q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) q -= 1;
  return q;
}

static int64_t r_root = 0;  // root: 0=Heat 1=Cool
static int64_t temp = 2;
static bool alarm = 0;
static int thermostat_err = 0;

void thermostat_init(void) {
  r_root = 0;
  temp = 2;
  alarm = 0;
  thermostat_err = 0;
}

void thermostat_event_warm(void) {
  thermostat_err = 0;
  if ((r_root == 0) && (temp < 5)) {
    int64_t n0 = 0;
    int64_t n1 = temp + 1;
    if (n1 < 0 || n1 > 5) {
      thermostat_err = 4;
      return;
    }
    r_root = n0;
    temp = n1;
  }
}

void thermostat_event_sense(void) {
  thermostat_err = 0;
  if ((r_root == 0) && (temp > 3)) {
    int64_t n0 = 1;
    bool n1 = temp == 5;
    r_root = n0;
    alarm = n1;
  } else if ((r_root == 0) && !(temp > 3)) {
    int64_t n0 = 0;
    bool n1 = 0;
    r_root = n0;
    alarm = n1;
  } else if ((r_root == 1) && (temp < 2)) {
    int64_t n0 = 0;
    bool n1 = 0;
    r_root = n0;
    alarm = n1;
  } else if ((r_root == 1) && ((pc_div(temp, 2) == 2) && !alarm)) {
    int64_t n0 = 1;
    bool n1 = 1;
    r_root = n0;
    alarm = n1;
  }
}

void thermostat_event_chill(void) {
  thermostat_err = 0;
  if ((r_root == 1) && (temp > 0)) {
    int64_t n0 = 1;
    int64_t n1 = temp - 1;
    if (n1 < 0 || n1 > 5) {
      thermostat_err = 5;
      return;
    }
    r_root = n0;
    temp = n1;
  }
}

void thermostat_tick(void) {
  thermostat_err = 0;
}

int thermostat_error(void) {
  return thermostat_err;
}

void thermostat_dump_state(void) {
  printf("r_root=%lld\n", (long long)r_root);
  printf("temp=%lld\n", (long long)temp);
  printf("alarm=%lld\n", (long long)alarm);
}
