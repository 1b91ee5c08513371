/* SPDX-License-Identifier: GPL-2.0 */
#ifndef _LINUX_PERCPU_DEFS_H
#define _LINUX_PERCPU_DEFS_H

/*
 * raw_cpu_ptr() gives no protection against preemption: the caller
 * must make sure the task cannot migrate while the pointer is used.
 */
#define raw_cpu_ptr(ptr)						\
({									\
	__verify_pcpu_ptr(ptr);						\
	arch_raw_cpu_ptr(ptr);						\
})

/* Like raw_cpu_ptr(), but warns when called with preemption enabled. */
#define this_cpu_ptr(ptr) raw_cpu_ptr(ptr)

#endif /* _LINUX_PERCPU_DEFS_H */
