/* The public header must compile as C. */
#include <stdio.h>
#include <unibeta/unibeta.h>

int main(void) {
  ub_records* r = NULL;
  if (ub_records_create(&r) != UB_OK) return 1;
  if (ub_records_add(r, "1", "F1", "a", 2) != UB_OK) return 1;
  if (ub_records_count(r) != 1) return 1;
  ub_records_free(r);
  printf("%s\n", ub_version());
  return 0;
}
