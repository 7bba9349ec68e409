#ifndef THERMOSTAT_H
#define THERMOSTAT_H

void thermostat_init(void);
void thermostat_event_warm(void);
void thermostat_event_sense(void);
void thermostat_event_chill(void);
void thermostat_tick(void);
// transition id of the step rejected by a range check, 0 when the last step succeeded
int thermostat_error(void);
void thermostat_dump_state(void);

#endif
