#include "traffic.h"

#include <stdbool.h>
#include <stdint.h>
#include <stdio.h>

static int64_t r_root = 0;  // root: 0=Dark 1=Run
static int64_t r_Light = 0;  // root.Run.Light: 0=Red 1=Green 2=Yellow
static int64_t r_Ped = 0;  // root.Run.Ped: 0=Idle 1=Wait
// pending pedestrian requests
static int64_t presses = 0;
static int64_t c_Red = 0;  // clock of root.Run.Light.Red
static int64_t c_Green = 0;  // clock of root.Run.Light.Green
static int64_t c_Yellow = 0;  // clock of root.Run.Light.Yellow
static int64_t c_Wait = 0;  // clock of root.Run.Ped.Wait
static int traffic_err = 0;

void traffic_init(void) {
  r_root = 0;
  r_Light = 0;
  r_Ped = 0;
  presses = 0;
  c_Red = 0;
  c_Green = 0;
  c_Yellow = 0;
  c_Wait = 0;
  traffic_err = 0;
}

void traffic_event_power(void) {
  traffic_err = 0;
  if (r_root == 0) {
    int64_t n0 = 1;
    int64_t n1 = 0;
    int64_t n2 = 0;
    int64_t n3 = 0;
    r_root = n0;
    r_Light = n1;
    r_Ped = n2;
    c_Red = n3;
  } else if (r_root == 1) {
    int64_t n0 = 0;
    int64_t n1 = 0;
    int64_t n2 = 0;
    int64_t n3 = 0;
    int64_t n4 = 0;
    int64_t n5 = 0;
    int64_t n6 = 0;
    r_root = n0;
    r_Light = n1;
    r_Ped = n2;
    c_Red = n3;
    c_Green = n4;
    c_Yellow = n5;
    c_Wait = n6;
  }
}

void traffic_event_button(void) {
  traffic_err = 0;
  if (((r_root == 1) && (r_Ped == 0)) && (presses < 3)) {
    int64_t n0 = 1;
    int64_t n1 = presses + 1;
    int64_t n2 = 0;
    if (n1 < 0 || n1 > 3) {
      traffic_err = 16;
      return;
    }
    r_Ped = n0;
    presses = n1;
    c_Wait = n2;
  }
}

void traffic_tick(void) {
  traffic_err = 0;
  if (((r_root == 1) && (r_Light == 0)) && (c_Red == 3)) {
    int64_t n0 = 1;
    int64_t n1 = 0;
    int64_t n2 = 0;
    r_Light = n0;
    c_Red = n1;
    c_Green = n2;
  } else if ((((r_root == 1) && (r_Light == 1)) && ((2 <= c_Green) && (c_Green <= 4))) && (presses > 0)) {
    int64_t n0 = 2;
    int64_t n1 = presses - 1;
    int64_t n2 = 0;
    int64_t n3 = 0;
    if (n1 < 0 || n1 > 3) {
      traffic_err = 14;
      return;
    }
    r_Light = n0;
    presses = n1;
    c_Green = n2;
    c_Yellow = n3;
  } else if (((r_root == 1) && (r_Light == 2)) && (c_Yellow == 1)) {
    int64_t n0 = 0;
    int64_t n1 = 0;
    int64_t n2 = 0;
    r_Light = n0;
    c_Red = n1;
    c_Yellow = n2;
  } else if (((r_root == 1) && (r_Ped == 1)) && (c_Wait == 2)) {
    int64_t n0 = 0;
    int64_t n1 = 0;
    r_Ped = n0;
    c_Wait = n1;
  } else if ((((!(((r_root == 1) && (r_Light == 0)) && (c_Red < 3)) && !(((r_root == 1) && (r_Light == 1)) && (c_Green < 4))) && !(((r_root == 1) && (r_Light == 2)) && (c_Yellow < 1))) && !(((r_root == 1) && (r_Ped == 1)) && (c_Wait < 2))) && !((((((r_root == 1) && (r_Light == 0)) && (c_Red == 3)) || ((((r_root == 1) && (r_Light == 1)) && (c_Green == 4)) && (presses > 0))) || (((r_root == 1) && (r_Light == 2)) && (c_Yellow == 1))) || (((r_root == 1) && (r_Ped == 1)) && (c_Wait == 2)))) {
  } else if (((((r_root == 1) && (r_Light == 0)) && (c_Red < 3)) && !(((r_root == 1) && (r_Ped == 1)) && (c_Wait < 2))) && !((((((r_root == 1) && (r_Light == 0)) && (c_Red == 3)) || ((((r_root == 1) && (r_Light == 1)) && (c_Green == 4)) && (presses > 0))) || (((r_root == 1) && (r_Light == 2)) && (c_Yellow == 1))) || (((r_root == 1) && (r_Ped == 1)) && (c_Wait == 2)))) {
    c_Red = c_Red + 1;
  } else if (((((r_root == 1) && (r_Light == 1)) && (c_Green < 4)) && !(((r_root == 1) && (r_Ped == 1)) && (c_Wait < 2))) && !((((((r_root == 1) && (r_Light == 0)) && (c_Red == 3)) || ((((r_root == 1) && (r_Light == 1)) && (c_Green == 4)) && (presses > 0))) || (((r_root == 1) && (r_Light == 2)) && (c_Yellow == 1))) || (((r_root == 1) && (r_Ped == 1)) && (c_Wait == 2)))) {
    c_Green = c_Green + 1;
  } else if (((((r_root == 1) && (r_Light == 2)) && (c_Yellow < 1)) && !(((r_root == 1) && (r_Ped == 1)) && (c_Wait < 2))) && !((((((r_root == 1) && (r_Light == 0)) && (c_Red == 3)) || ((((r_root == 1) && (r_Light == 1)) && (c_Green == 4)) && (presses > 0))) || (((r_root == 1) && (r_Light == 2)) && (c_Yellow == 1))) || (((r_root == 1) && (r_Ped == 1)) && (c_Wait == 2)))) {
    c_Yellow = c_Yellow + 1;
  } else if ((((!(((r_root == 1) && (r_Light == 0)) && (c_Red < 3)) && !(((r_root == 1) && (r_Light == 1)) && (c_Green < 4))) && !(((r_root == 1) && (r_Light == 2)) && (c_Yellow < 1))) && (((r_root == 1) && (r_Ped == 1)) && (c_Wait < 2))) && !((((((r_root == 1) && (r_Light == 0)) && (c_Red == 3)) || ((((r_root == 1) && (r_Light == 1)) && (c_Green == 4)) && (presses > 0))) || (((r_root == 1) && (r_Light == 2)) && (c_Yellow == 1))) || (((r_root == 1) && (r_Ped == 1)) && (c_Wait == 2)))) {
    c_Wait = c_Wait + 1;
  } else if (((((r_root == 1) && (r_Light == 0)) && (c_Red < 3)) && (((r_root == 1) && (r_Ped == 1)) && (c_Wait < 2))) && !((((((r_root == 1) && (r_Light == 0)) && (c_Red == 3)) || ((((r_root == 1) && (r_Light == 1)) && (c_Green == 4)) && (presses > 0))) || (((r_root == 1) && (r_Light == 2)) && (c_Yellow == 1))) || (((r_root == 1) && (r_Ped == 1)) && (c_Wait == 2)))) {
    int64_t n0 = c_Red + 1;
    int64_t n1 = c_Wait + 1;
    c_Red = n0;
    c_Wait = n1;
  } else if (((((r_root == 1) && (r_Light == 1)) && (c_Green < 4)) && (((r_root == 1) && (r_Ped == 1)) && (c_Wait < 2))) && !((((((r_root == 1) && (r_Light == 0)) && (c_Red == 3)) || ((((r_root == 1) && (r_Light == 1)) && (c_Green == 4)) && (presses > 0))) || (((r_root == 1) && (r_Light == 2)) && (c_Yellow == 1))) || (((r_root == 1) && (r_Ped == 1)) && (c_Wait == 2)))) {
    int64_t n0 = c_Green + 1;
    int64_t n1 = c_Wait + 1;
    c_Green = n0;
    c_Wait = n1;
  } else if (((((r_root == 1) && (r_Light == 2)) && (c_Yellow < 1)) && (((r_root == 1) && (r_Ped == 1)) && (c_Wait < 2))) && !((((((r_root == 1) && (r_Light == 0)) && (c_Red == 3)) || ((((r_root == 1) && (r_Light == 1)) && (c_Green == 4)) && (presses > 0))) || (((r_root == 1) && (r_Light == 2)) && (c_Yellow == 1))) || (((r_root == 1) && (r_Ped == 1)) && (c_Wait == 2)))) {
    int64_t n0 = c_Yellow + 1;
    int64_t n1 = c_Wait + 1;
    c_Yellow = n0;
    c_Wait = n1;
  }
}

int traffic_error(void) {
  return traffic_err;
}

void traffic_dump_state(void) {
  printf("r_root=%lld\n", (long long)r_root);
  printf("r_Light=%lld\n", (long long)r_Light);
  printf("r_Ped=%lld\n", (long long)r_Ped);
  printf("presses=%lld\n", (long long)presses);
  printf("c_Red=%lld\n", (long long)c_Red);
  printf("c_Green=%lld\n", (long long)c_Green);
  printf("c_Yellow=%lld\n", (long long)c_Yellow);
  printf("c_Wait=%lld\n", (long long)c_Wait);
}
