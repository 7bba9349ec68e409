#ifndef TOGGLE_H
#define TOGGLE_H

void toggle_init(void);
void toggle_event_E(void);
void toggle_tick(void);
// transition id of the step rejected by a range check, 0 when the last step succeeded
int toggle_error(void);
void toggle_dump_state(void);

#endif
